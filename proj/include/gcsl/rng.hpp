#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace gcsl {

using Engine = std::mt19937_64;

// Samples are drawn in fixed-size chunks; chunk i always uses stream i of the
// caller's seed, so results do not depend on how chunks are scheduled.
inline constexpr std::size_t kChunkSize = 4096;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline Engine stream_engine(std::uint64_t seed, std::uint64_t stream) {
  return Engine(derive_seed(seed, stream));
}

struct ChunkRange {
  std::size_t index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

inline std::size_t default_workers() {
  return std::max(1u, std::thread::hardware_concurrency());
}

// Evaluates body(range, engine) for every chunk of [0, count) and returns the
// per-chunk results in chunk order. workers = 0 picks the hardware default.
template <typename Result, typename Body>
std::vector<Result> map_chunks(std::size_t count, std::uint64_t seed, Body&& body, std::size_t workers = 0) {
  const std::size_t chunks = (count + kChunkSize - 1) / kChunkSize;
  std::vector<Result> results(chunks);
  auto run = [&](std::size_t c) {
    ChunkRange range{c, c * kChunkSize, std::min(count, (c + 1) * kChunkSize)};
    Engine engine = stream_engine(seed, c);
    results[c] = body(range, engine);
  };

  if (workers == 0) workers = default_workers();
  workers = std::min(workers, chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < chunks; c = next++) {
        try {
          run(c);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace gcsl
