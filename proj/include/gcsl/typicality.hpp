#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "gcsl/error.hpp"
#include "gcsl/gaussian.hpp"
#include "gcsl/rng.hpp"

namespace gcsl {

// ---------------------------------------------------------------------------
// Normal tail

// Q(x) = P(Z > x) for standard normal Z.
inline double qfunc(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Inverse of qfunc on (0, 1). Bisection brackets the root, then Newton steps on
// ln Q polish it; for p > 1/2 the mirrored problem Q(-x) = 1 - p is solved
// instead (1 - p is exact there).
inline double qfunc_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::DomainError, "qfunc_inv needs p in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p > 0.5) return -qfunc_inv(1.0 - p);

  double lo = 0.0;
  double hi = 40.0;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    (qfunc(mid) > p ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  const double log_p = std::log(p);
  for (int i = 0; i < 50; ++i) {
    const double q = qfunc(x);
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    // d/dx ln Q(x) = -pdf / Q
    const double step = (std::log(q) - log_p) / (pdf / q);
    x += step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

// Standard normal CDF.
inline double normal_cdf(double x) { return qfunc(-x); }

// ---------------------------------------------------------------------------
// Scalar families {delta^[n]}

struct ConstantFamily {
  double c;
};
struct LinearFamily {
  double xi;
};
struct SqrtScaledFamily {
  double c;
};
// c * B_n for a fixed hypothesis pair; bn(n) supplies B_n.
struct BnScaledFamily {
  double c;
  std::function<double(std::size_t)> bn;
};
// Tabulated values; linear interpolation in n, constant beyond the ends.
struct TableFamily {
  std::vector<std::pair<std::size_t, double>> entries;
};

using ScalarFamily = std::variant<ConstantFamily, LinearFamily, SqrtScaledFamily, BnScaledFamily, TableFamily>;

inline double evaluate(const ScalarFamily& family, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidDimension, "families are indexed from n = 1");
  const double dn = static_cast<double>(n);
  const double value = std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantFamily>) {
          return f.c;
        } else if constexpr (std::is_same_v<T, LinearFamily>) {
          return f.xi * dn;
        } else if constexpr (std::is_same_v<T, SqrtScaledFamily>) {
          return f.c * std::sqrt(dn);
        } else if constexpr (std::is_same_v<T, BnScaledFamily>) {
          return f.c * f.bn(n);
        } else {
          const auto& e = f.entries;
          if (e.empty()) throw Error(ErrorCode::DomainError, "empty family table");
          if (n <= e.front().first) return e.front().second;
          if (n >= e.back().first) return e.back().second;
          auto hi = std::lower_bound(e.begin(), e.end(), n, [](const auto& a, std::size_t v) { return a.first < v; });
          auto lo = std::prev(hi);
          const double t = (dn - static_cast<double>(lo->first)) / static_cast<double>(hi->first - lo->first);
          return lo->second + t * (hi->second - lo->second);
        }
      },
      family);
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::DomainError, "family value must be positive and finite");
  }
  return value;
}

enum class FamilyClass { GoodForAllConstants, Not };

struct FamilyClassification {
  FamilyClass cls = FamilyClass::Not;
  bool heuristic = false;  // set when decided from a finite table
};

// A family is eps-good for every constant eps exactly when delta^[n]/sqrt(n)
// diverges. Linear families do; constant, sqrt-scaled and B_n-scaled
// (B_n = Theta(sqrt n) for stationary pairs) do not. Tables are judged by the
// log-log slope of delta/sqrt(n) over their range.
inline FamilyClassification family_class(const ScalarFamily& family) {
  if (std::holds_alternative<LinearFamily>(family)) return {FamilyClass::GoodForAllConstants, false};
  const auto* table = std::get_if<TableFamily>(&family);
  if (table == nullptr) return {FamilyClass::Not, false};

  const auto& e = table->entries;
  if (e.size() < 2) return {FamilyClass::Not, true};
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [n, v] : e) {
    const double x = std::log(static_cast<double>(n));
    const double y = std::log(v) - 0.5 * x;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(e.size());
  const double denom = m * sxx - sx * sx;
  if (denom <= 0.0) return {FamilyClass::Not, true};
  const double slope = (m * sxy - sx * sy) / denom;
  return {slope > 0.1 ? FamilyClass::GoodForAllConstants : FamilyClass::Not, true};
}

// ---------------------------------------------------------------------------
// Typical-set membership

namespace detail {
inline void require_positive_delta(double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::DomainError, "delta must be positive");
}
}  // namespace detail

// h - delta <= -ln p(x) <= h + delta
inline bool entropy_typical_member(const GaussianModel& m, double delta, std::span<const double> x) {
  detail::require_positive_delta(delta);
  return std::abs(-log_density(m, x) - m.entropy()) <= delta;
}

// Equivalent Gaussian form |x^T cov^{-1} x - n| <= 2 delta.
inline bool entropy_typical_member_quadratic(const GaussianModel& m, double delta, std::span<const double> x) {
  detail::require_positive_delta(delta);
  return std::abs(m.quadratic_form(x) - static_cast<double>(m.n())) <= 2.0 * delta;
}

// D - delta <= ln p(x)/q(x) <= D + delta
inline bool rel_typical_member(const HypothesisPair& pair, double delta, std::span<const double> x) {
  detail::require_positive_delta(delta);
  return std::abs(llr(pair, x) - pair.kl()) <= delta;
}

// Whitened form |sum (kappa_k - 1)(y_k^2 / kappa_k - 1)| <= 2 delta.
inline bool rel_typical_member_whitened(const HypothesisPair& pair, double delta, std::span<const double> y) {
  detail::require_positive_delta(delta);
  pair.p().check_dimension(y.size());
  const auto kappas = pair.kappas();
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) s += (kappas[k] - 1.0) * (y[k] * y[k] / kappas[k] - 1.0);
  return std::abs(s) <= 2.0 * delta;
}

// ---------------------------------------------------------------------------
// Minimal eps-good thresholds (CLT scale)

namespace detail {
inline void require_eps(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw Error(ErrorCode::DomainError, "eps must lie in (0, 1]");
}
}  // namespace detail

// sigma sqrt(n) Q^{-1}(eps/2), sigma^2 = Var(-ln p(X_1)).
inline double good_delta_iid(double sigma, std::size_t n, double eps) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::DomainError, "sigma must be positive");
  if (n == 0) throw Error(ErrorCode::InvalidDimension, "n must be >= 1");
  detail::require_eps(eps);
  return sigma * std::sqrt(static_cast<double>(n)) * qfunc_inv(0.5 * eps);
}

// sqrt(n/2) Q^{-1}(eps/2): the iid threshold with sigma^2 = Var(chi^2_1)/4.
inline double good_delta_white_gaussian(std::size_t n, double eps) {
  if (n == 0) throw Error(ErrorCode::InvalidDimension, "n must be >= 1");
  detail::require_eps(eps);
  return std::sqrt(0.5 * static_cast<double>(n)) * qfunc_inv(0.5 * eps);
}

struct CorrelatedThreshold {
  double delta = 0.0;
  double bn = 0.0;
};

// (B_n / sqrt 2) Q^{-1}(eps/2) with B_n^2 = sum (kappa_k - 1)^2.
inline CorrelatedThreshold good_delta_correlated(const HypothesisPair& pair, double eps) {
  detail::require_eps(eps);
  pair.require_nondegenerate();
  return {pair.bn() / std::numbers::sqrt2 * qfunc_inv(0.5 * eps), pair.bn()};
}

// ---------------------------------------------------------------------------
// Monte Carlo typical-set probabilities

// Non-owning description of a typical set; the model or pair must outlive it.
class TypicalSetSpec {
 public:
  static TypicalSetSpec entropy(const GaussianModel& m, double delta) {
    detail::require_positive_delta(delta);
    return TypicalSetSpec(&m, nullptr, delta, m.entropy());
  }
  static TypicalSetSpec relative_entropy(const HypothesisPair& pair, double delta) {
    detail::require_positive_delta(delta);
    return TypicalSetSpec(nullptr, &pair, delta, pair.kl());
  }

  bool is_relative() const { return pair_ != nullptr; }
  const GaussianModel* model() const { return model_; }
  const HypothesisPair* pair() const { return pair_; }
  double center() const { return center_; }
  double delta() const { return delta_; }
  std::size_t n() const { return pair_ != nullptr ? pair_->n() : model_->n(); }

 private:
  TypicalSetSpec(const GaussianModel* m, const HypothesisPair* pair, double delta, double center)
      : model_(m), pair_(pair), delta_(delta), center_(center) {
    if (!std::isfinite(center_)) throw Error(ErrorCode::DomainError, "typical-set center is not finite");
  }

  const GaussianModel* model_;
  const HypothesisPair* pair_;
  double delta_;
  double center_;
};

struct ProbabilityEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

namespace detail {
inline ProbabilityEstimate fraction_within(std::span<const double> values, double center, double delta) {
  std::size_t hits = 0;
  for (double v : values) hits += std::abs(v - center) <= delta ? 1 : 0;
  const double n = static_cast<double>(values.size());
  const double est = static_cast<double>(hits) / n;
  return {est, std::sqrt(est * (1.0 - est) / n)};
}

inline void require_mc_samples(std::size_t count) {
  if (count < 1000) throw Error(ErrorCode::DomainError, "Monte Carlo estimates need at least 1000 samples");
}
}  // namespace detail

// Fraction of count draws from p that land in the set.
inline ProbabilityEstimate mc_typical_prob(const TypicalSetSpec& spec, std::size_t count, std::uint64_t seed) {
  detail::require_mc_samples(count);
  const auto values = spec.is_relative() ? llr_samples(*spec.pair(), Hypothesis::P, seed, count)
                                         : neg_log_density_samples(*spec.model(), seed, count);
  return detail::fraction_within(values, spec.center(), spec.delta());
}

// Fraction of count draws from q that land in the relative-entropy set.
inline ProbabilityEstimate mc_rel_typical_prob_under_q(const HypothesisPair& pair, double delta, std::size_t count,
                                                       std::uint64_t seed) {
  detail::require_positive_delta(delta);
  detail::require_mc_samples(count);
  const auto values = llr_samples(pair, Hypothesis::Q, seed, count);
  return detail::fraction_within(values, pair.kl(), delta);
}

// ---------------------------------------------------------------------------
// Bound calculators (nats). Log-domain values are always filled; the linear
// values overflow to inf when the exponent is out of range.

struct VolumeBounds {
  double upper = 0.0;
  double lower = 0.0;
  double log_upper = 0.0;
  double log_lower = 0.0;
  bool overflow = false;
};

// vol(A) <= e^{h + delta}; vol(A) >= (1 - eps) e^{h - delta}.
inline VolumeBounds volume_bounds(double h, double delta, double eps) {
  if (!(delta >= 0.0)) throw Error(ErrorCode::DomainError, "delta must be non-negative");
  if (!(eps >= 0.0 && eps < 1.0)) throw Error(ErrorCode::DomainError, "eps must lie in [0, 1)");
  VolumeBounds b;
  b.log_upper = h + delta;
  b.log_lower = std::log1p(-eps) + h - delta;
  b.upper = std::exp(b.log_upper);
  b.lower = std::exp(b.log_lower);
  b.overflow = std::isinf(b.upper) || std::isinf(b.lower);
  return b;
}

struct LogValue {
  double value = 0.0;
  double log_value = 0.0;
};

// Any set B with p(B) >= 1 - eps2 has vol(B) >= (1 - eps - eps2) e^{h - delta}.
inline LogValue other_set_volume_lb(double h, double delta, double eps, double eps2) {
  if (!(delta >= 0.0)) throw Error(ErrorCode::DomainError, "delta must be non-negative");
  if (!(eps >= 0.0 && eps2 >= 0.0)) throw Error(ErrorCode::DomainError, "eps values must be non-negative");
  if (!(eps + eps2 < 1.0)) throw Error(ErrorCode::VacuousBound, "eps + eps2 >= 1 gives no bound");
  const double log_value = std::log1p(-(eps + eps2)) + h - delta;
  return {std::exp(log_value), log_value};
}

struct QProbBounds {
  double upper = 0.0;
  double lower = 0.0;
  double log_upper = 0.0;
  double log_lower = 0.0;
};

// q(A) <= e^{-(D - delta)}; q(A) >= (1 - eps) e^{-(D + delta)}.
inline QProbBounds q_prob_bounds(double d, double delta, double eps) {
  if (!(delta >= 0.0)) throw Error(ErrorCode::DomainError, "delta must be non-negative");
  if (!(eps >= 0.0 && eps < 1.0)) throw Error(ErrorCode::DomainError, "eps must lie in [0, 1)");
  QProbBounds b;
  b.log_upper = -(d - delta);
  b.log_lower = std::log1p(-eps) - (d + delta);
  b.upper = std::exp(b.log_upper);
  b.lower = std::exp(b.log_lower);
  return b;
}

// ---------------------------------------------------------------------------
// CLT check of the normalized log-likelihood fluctuation

struct CltCheck {
  double ks_distance = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  bool pass = false;
};

inline constexpr double kDefaultKsBound = 0.02;

// Simulates sum_k (kappa_k - 1)/(sqrt(2) B_n) (Y_k^2 - 1) with Y_k iid standard
// normal and measures its Kolmogorov-Smirnov distance to the standard normal.
inline CltCheck clt_psi_check(const HypothesisPair& pair, std::size_t count, std::uint64_t seed,
                              double ks_bound = kDefaultKsBound) {
  pair.require_nondegenerate();
  if (count < 10000) throw Error(ErrorCode::DomainError, "the CLT check needs at least 1e4 samples");
  const auto kappas = pair.kappas();
  Vector weight(kappas.size());
  for (std::size_t k = 0; k < kappas.size(); ++k) weight[k] = (kappas[k] - 1.0) / (std::numbers::sqrt2 * pair.bn());

  auto chunks = map_chunks<std::vector<double>>(count, seed, [&](const ChunkRange& r, Engine& eng) {
    std::normal_distribution<double> normal;
    std::vector<double> out(r.size());
    for (double& value : out) {
      double s = 0.0;
      for (double w : weight) {
        const double y = normal(eng);
        s += w * (y * y - 1.0);
      }
      value = s;
    }
    return out;
  });
  std::vector<double> sums;
  sums.reserve(count);
  for (const auto& c : chunks) sums.insert(sums.end(), c.begin(), c.end());

  CltCheck out;
  const double n = static_cast<double>(count);
  for (double s : sums) out.mean += s;
  out.mean /= n;
  for (double s : sums) out.variance += (s - out.mean) * (s - out.mean);
  out.variance /= n - 1.0;

  std::sort(sums.begin(), sums.end());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    const double cdf = normal_cdf(sums[i]);
    const double above = static_cast<double>(i + 1) / n - cdf;
    const double below = cdf - static_cast<double>(i) / n;
    out.ks_distance = std::max({out.ks_distance, above, below});
  }
  out.pass = out.ks_distance < ks_bound;
  return out;
}

}  // namespace gcsl
