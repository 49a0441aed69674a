#pragma once

#include <numbers>

namespace gcsl {

// Information quantities are carried in nats; bits are a reporting unit only.
enum class InfoUnit { Nats, Bits };

inline constexpr double nats_to_bits(double nats) { return nats / std::numbers::ln2; }
inline constexpr double bits_to_nats(double bits) { return bits * std::numbers::ln2; }

inline constexpr double in_unit(double nats, InfoUnit unit) {
  return unit == InfoUnit::Bits ? nats_to_bits(nats) : nats;
}

}  // namespace gcsl
