#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

#include "gcsl/error.hpp"

namespace gcsl {

// p uniform on [0,1]^n against a two-level q that is larger on the small cube
// max_i x_i <= n^{-1/n} of volume 1/n. D(p||q) grows like ln sqrt(n).
struct SublinearPair {
  std::size_t n = 0;
  double inner_radius = 0.0;  // n^{-1/n}
  double q_inner = 0.0;       // n - sqrt(n)
  double q_outer = 0.0;       // sqrt(n) / (n - 1)

  static SublinearPair make(std::size_t n) {
    if (n < 3) throw Error(ErrorCode::InvalidDimension, "sublinear pair needs n >= 3");
    const double d = static_cast<double>(n);
    const double r = std::sqrt(d);
    return {n, std::pow(d, -1.0 / d), d - r, r / (d - 1.0)};
  }

  double inner_volume() const { return 1.0 / static_cast<double>(n); }
};

namespace detail {

inline bool sub_inner(const SublinearPair& s, std::span<const double> x) {
  if (x.size() != s.n) throw Error(ErrorCode::DimensionMismatch, "point dimension differs from n");
  double mx = 0.0;
  for (double v : x) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::DomainError, "point lies outside the unit cube");
    mx = std::max(mx, v);
  }
  return mx <= s.inner_radius;
}

}  // namespace detail

inline double sub_q_density(std::size_t n, std::span<const double> x) {
  const auto s = SublinearPair::make(n);
  return detail::sub_inner(s, x) ? s.q_inner : s.q_outer;
}

// (1/n) ln(1/(n - sqrt n)) + (1 - 1/n) ln((n - 1)/sqrt n)
inline double sub_kl(std::size_t n) {
  const auto s = SublinearPair::make(n);
  const double d = static_cast<double>(n);
  return -std::log(s.q_inner) / d - (1.0 - 1.0 / d) * std::log(s.q_outer);
}

inline double sub_llr_inner(std::size_t n) { return -std::log(SublinearPair::make(n).q_inner); }
inline double sub_llr_outer(std::size_t n) { return -std::log(SublinearPair::make(n).q_outer); }

inline double sub_llr(std::size_t n, std::span<const double> x) {
  const auto s = SublinearPair::make(n);
  return detail::sub_inner(s, x) ? -std::log(s.q_inner) : -std::log(s.q_outer);
}

// p(B) for B = {max_i x_i > n^{-1/n}}. B lies in the typical set for any
// constant delta above |sub_residual(n)|.
inline double sub_typical_lb(std::size_t n) {
  SublinearPair::make(n);
  return 1.0 - 1.0 / static_cast<double>(n);
}

// sub_kl(n) - ln((n - 1)/sqrt n) = (1/n) ln(sqrt n / ((n - 1)(n - sqrt n))), negative for n >= 3.
// The llr on B exceeds D by -sub_residual(n).
inline double sub_residual(std::size_t n) {
  const auto s = SublinearPair::make(n);
  const double d = static_cast<double>(n);
  return (0.5 * std::log(d) - std::log(d - 1.0) - std::log(s.q_inner)) / d;
}

inline bool sub_rel_typical_member(std::size_t n, std::span<const double> x, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::DomainError, "delta must be positive");
  return std::abs(sub_llr(n, x) - sub_kl(n)) <= delta;
}

struct ExactErrors {
  double alpha = 0.0;  // p(inner)
  double beta = 0.0;   // q(outer)
  double beta_log = 0.0;
};

// Errors of the detector that decides p exactly on B.
inline ExactErrors exact_error_pair(std::size_t n) {
  const auto s = SublinearPair::make(n);
  const double d = static_cast<double>(n);
  ExactErrors e;
  e.alpha = 1.0 / d;
  e.beta = s.q_outer * (1.0 - s.inner_volume());
  e.beta_log = 0.5 * std::log(d);
  return e;
}

// Smallest n such that |sub_residual(m)| < delta for every m >= n.
inline std::size_t crossover_n(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw Error(ErrorCode::DomainError, "delta must be positive");
  // |residual| rises to its peak at a small n and decreases afterwards.
  std::size_t peak = 3;
  for (std::size_t m = 4; m <= 64; ++m) {
    if (std::abs(sub_residual(m)) > std::abs(sub_residual(peak))) peak = m;
  }
  if (std::abs(sub_residual(peak)) < delta) return 3;
  std::size_t lo = peak;  // |residual(lo)| >= delta
  std::size_t hi = peak;
  while (std::abs(sub_residual(hi)) >= delta) {
    lo = hi;
    if (hi > std::numeric_limits<std::size_t>::max() / 4) throw Error(ErrorCode::NumericalFailure, "crossover is out of range");
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (std::abs(sub_residual(mid)) >= delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

}  // namespace gcsl
