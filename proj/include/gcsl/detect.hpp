#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "gcsl/covariance.hpp"
#include "gcsl/error.hpp"
#include "gcsl/gaussian.hpp"
#include "gcsl/numlin.hpp"
#include "gcsl/rng.hpp"
#include "gcsl/spectral.hpp"
#include "gcsl/typicality.hpp"

namespace gcsl {

// Decide p when llr(x) > threshold. An infinite threshold gives the whole
// space (-inf) or the empty set (+inf).
struct NpThreshold {
  double threshold;
};

// Decide p on the relative-entropy typical set |llr(x) - D| <= gamma.
struct TypicalSetRegion {
  double gamma;
};

class DetectorSpec {
 public:
  static DetectorSpec np_threshold(double t) {
    if (std::isnan(t)) throw Error(ErrorCode::DomainError, "threshold is NaN");
    return DetectorSpec(NpThreshold{t});
  }
  static DetectorSpec typical_set(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::DomainError, "gamma must be positive");
    return DetectorSpec(TypicalSetRegion{gamma});
  }

  const std::variant<NpThreshold, TypicalSetRegion>& kind() const { return kind_; }

  // Whether a sample with log-likelihood ratio llr_value falls in B_p.
  bool decides_p(double llr_value, double kl) const {
    if (const auto* np = std::get_if<NpThreshold>(&kind_)) return llr_value > np->threshold;
    return std::abs(llr_value - kl) <= std::get<TypicalSetRegion>(kind_).gamma;
  }

 private:
  explicit DetectorSpec(std::variant<NpThreshold, TypicalSetRegion> kind) : kind_(kind) {}
  std::variant<NpThreshold, TypicalSetRegion> kind_;
};

// Neyman-Pearson detector whose threshold is the empirical tau-quantile of the
// llr under p, chosen so the calibration sample has alpha strictly below tau.
inline DetectorSpec np_calibrate(const HypothesisPair& pair, double tau, std::size_t count, std::uint64_t seed) {
  if (!(tau > 0.0 && tau < 0.5)) throw Error(ErrorCode::DomainError, "tau must lie in (0, 1/2)");
  if (count < 10000) throw Error(ErrorCode::DomainError, "calibration needs at least 1e4 samples");
  pair.require_nondegenerate();
  auto values = llr_samples(pair, Hypothesis::P, seed, count);
  // m misses allowed with m / count < tau.
  const auto m = static_cast<std::size_t>(std::ceil(tau * static_cast<double>(count))) - 1;
  if (m == 0) return DetectorSpec::np_threshold(-std::numeric_limits<double>::infinity());
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(m - 1), values.end());
  return DetectorSpec::np_threshold(values[m - 1]);
}

inline double threshold_of(const DetectorSpec& det) {
  if (const auto* np = std::get_if<NpThreshold>(&det.kind())) return np->threshold;
  throw Error(ErrorCode::DomainError, "detector is not a threshold detector");
}

// alpha = p(B_p^c) by direct sampling under p.
inline ProbabilityEstimate estimate_alpha(const DetectorSpec& det, const HypothesisPair& pair, std::size_t count,
                                          std::uint64_t seed) {
  if (count < 1000) throw Error(ErrorCode::DomainError, "alpha estimation needs at least 1000 samples");
  const auto values = llr_samples(pair, Hypothesis::P, seed, count);
  std::size_t misses = 0;
  for (double l : values) misses += det.decides_p(l, pair.kl()) ? 0 : 1;
  const double n = static_cast<double>(count);
  const double a = static_cast<double>(misses) / n;
  return {a, std::sqrt(a * (1.0 - a) / n)};
}

struct ErrorEstimates {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  double beta_log = 0.0;  // -ln beta_hat, nats
  double stderr_alpha = 0.0;
  double stderr_beta_log = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  bool beta_underflow = false;  // no sample fell in B_p; beta_log is +inf
};

namespace detail {

// Running log(sum exp(x_i)) with a max shift.
struct LogSumExp {
  double max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;  // sum of exp(x_i - max)

  void add(double x) {
    if (x <= max) {
      sum += std::exp(x - max);
    } else {
      sum = sum * std::exp(max - x) + 1.0;
      max = x;
    }
  }
  void merge(const LogSumExp& o) {
    if (o.sum == 0.0) return;
    if (sum == 0.0) {
      *this = o;
      return;
    }
    if (o.max <= max) {
      sum += o.sum * std::exp(o.max - max);
    } else {
      sum = sum * std::exp(max - o.max) + o.sum;
      max = o.max;
    }
  }
  bool empty() const { return sum == 0.0; }
  double value() const { return empty() ? -std::numeric_limits<double>::infinity() : max + std::log(sum); }
};

}  // namespace detail

// beta = q(B_p) = E_p[exp(-llr) 1{x in B_p}], estimated from p-samples only.
// Weights are accumulated in the log domain; the stderr of -ln beta_hat is the
// delta-method value sqrt(Var(w) / N) / beta_hat.
inline ErrorEstimates estimate_beta_is(const DetectorSpec& det, const HypothesisPair& pair, std::size_t count,
                                       std::uint64_t seed) {
  if (count < 1000) throw Error(ErrorCode::DomainError, "beta estimation needs at least 1000 samples");
  const double kl = pair.kl();
  struct Partial {
    detail::LogSumExp w, w2;
    std::size_t misses = 0;
  };
  const auto kappas = pair.kappas();
  Vector coeff(kappas.size());
  for (std::size_t k = 0; k < kappas.size(); ++k) coeff[k] = 0.5 * (kappas[k] - 1.0);
  const double offset = -0.5 * pair.log_kappa_sum();

  // Same draws as llr_samples(pair, P, seed, count), reduced chunk by chunk.
  const auto partials = map_chunks<Partial>(count, seed, [&](const ChunkRange& r, Engine& eng) {
    std::normal_distribution<double> normal;
    Partial part;
    for (std::size_t i = r.begin; i < r.end; ++i) {
      double s = 0.0;
      for (double c : coeff) {
        const double z = normal(eng);
        s += c * z * z;
      }
      const double l = s + offset;
      if (det.decides_p(l, kl)) {
        part.w.add(-l);
        part.w2.add(-2.0 * l);
      } else {
        ++part.misses;
      }
    }
    return part;
  });

  Partial total;
  for (const auto& p : partials) {
    total.w.merge(p.w);
    total.w2.merge(p.w2);
    total.misses += p.misses;
  }

  ErrorEstimates out;
  out.samples = count;
  out.seed = seed;
  const double n = static_cast<double>(count);
  out.alpha_hat = static_cast<double>(total.misses) / n;
  out.stderr_alpha = std::sqrt(out.alpha_hat * (1.0 - out.alpha_hat) / n);
  if (total.w.empty()) {
    out.beta_underflow = true;
    out.beta_hat = 0.0;
    out.beta_log = std::numeric_limits<double>::infinity();
    out.stderr_beta_log = std::numeric_limits<double>::infinity();
    return out;
  }
  const double log_n = std::log(n);
  const double log_beta = total.w.value() - log_n;
  out.beta_hat = std::exp(log_beta);
  out.beta_log = -log_beta;
  // E[w^2] / beta^2 - 1 = Var(w) / beta^2
  const double rel_second_moment = std::exp(total.w2.value() - log_n - 2.0 * log_beta);
  out.stderr_beta_log = std::sqrt(std::max(0.0, rel_second_moment - 1.0) / n);
  return out;
}

struct SteinBounds {
  double beta_lower = 0.0;
  double beta_upper = 0.0;
  double exp_lower = 0.0;  // D - gamma
  double exp_upper = 0.0;  // D + delta - ln(1 - eps - tau)
};

// (1 - eps - tau) e^{-(D + delta)} <= beta_tau <= e^{-(D - gamma)} for a
// tau-good gamma and an eps-good delta.
inline SteinBounds stein_bounds(double d, double delta, double gamma, double eps, double tau) {
  if (!(delta >= 0.0 && gamma >= 0.0)) throw Error(ErrorCode::DomainError, "delta and gamma must be non-negative");
  if (!(eps >= 0.0 && tau >= 0.0)) throw Error(ErrorCode::DomainError, "eps and tau must be non-negative");
  if (!(eps + tau < 1.0)) throw Error(ErrorCode::VacuousBound, "eps + tau >= 1 gives no bound");
  SteinBounds b;
  b.exp_lower = d - gamma;
  b.exp_upper = d + delta - std::log1p(-(eps + tau));
  b.beta_upper = std::exp(-b.exp_lower);
  b.beta_lower = std::exp(-b.exp_upper);
  return b;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least-squares line through (ns[i], beta_logs[i]).
inline LinearFit exponent_fit(std::span<const double> ns, std::span<const double> beta_logs) {
  if (ns.size() != beta_logs.size()) throw Error(ErrorCode::DimensionMismatch, "fit inputs differ in length");
  if (ns.size() < 3) throw Error(ErrorCode::DomainError, "exponent fit needs at least 3 points");
  const double m = static_cast<double>(ns.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    mx += ns[i];
    my += beta_logs[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    sxx += (ns[i] - mx) * (ns[i] - mx);
    sxy += (ns[i] - mx) * (beta_logs[i] - my);
    syy += (beta_logs[i] - my) * (beta_logs[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::DomainError, "exponent fit abscissae are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double r = beta_logs[i] - (fit.intercept + fit.slope * ns[i]);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Full Stein-exponent experiment over a list of dimensions

struct GcslRow {
  std::size_t n = 0;
  double kl = 0.0;
  double kl_per_sample = 0.0;
  double stein_rate = 0.0;
  double bn = 0.0;
  double gamma = 0.0;  // minimal tau-good threshold
  double delta = 0.0;  // minimal eps-good threshold
  SteinBounds window;
  double np_threshold = 0.0;
  ErrorEstimates np;
  ErrorEstimates ts;
  bool in_window = false;
};

struct GcslResult {
  std::vector<GcslRow> rows;
  LinearFit fit;
  double stein_rate = 0.0;
  double rel_err = 0.0;  // |slope - C_s| / C_s
};

struct GcslOptions {
  double tau = 0.2;
  double eps = 0.2;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  std::size_t grid_points = kDefaultGridPoints;
  double window_sigmas = 3.0;
};

// Per-dimension streams: calibration, NP evaluation and typical-set evaluation
// draw from disjoint derived seeds.
enum class ExperimentStream : std::uint64_t { Calibrate = 0, EvaluateNp = 1, EvaluateTypical = 2 };

inline std::uint64_t experiment_seed(std::uint64_t seed, std::size_t n, ExperimentStream s) {
  return derive_seed(seed, 4 * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(s));
}

inline GcslRow gcsl_row(const CovarianceSequence& kp, const CovarianceSequence& kq, std::size_t n, double stein,
                        const GcslOptions& opt) {
  const auto pair = whiten(toeplitz_from_cov(kp, n), toeplitz_from_cov(kq, n));
  pair.require_nondegenerate();
  GcslRow row;
  row.n = n;
  row.kl = pair.kl();
  row.kl_per_sample = row.kl / static_cast<double>(n);
  row.stein_rate = stein;
  row.bn = pair.bn();
  row.gamma = good_delta_correlated(pair, opt.tau).delta;
  row.delta = good_delta_correlated(pair, opt.eps).delta;
  row.window = stein_bounds(row.kl, row.delta, row.gamma, opt.eps, opt.tau);

  const auto np = np_calibrate(pair, opt.tau, opt.samples, experiment_seed(opt.seed, n, ExperimentStream::Calibrate));
  row.np_threshold = threshold_of(np);
  row.np = estimate_beta_is(np, pair, opt.samples, experiment_seed(opt.seed, n, ExperimentStream::EvaluateNp));
  row.ts = estimate_beta_is(DetectorSpec::typical_set(row.gamma), pair, opt.samples,
                            experiment_seed(opt.seed, n, ExperimentStream::EvaluateTypical));
  const double slack = opt.window_sigmas * row.np.stderr_beta_log;
  row.in_window = !row.np.beta_underflow && row.np.beta_log >= row.window.exp_lower - slack &&
                  row.np.beta_log <= row.window.exp_upper + slack;
  return row;
}

inline GcslResult gcsl_experiment(const CovarianceSequence& kp, const CovarianceSequence& kq,
                                  std::span<const std::size_t> ns, const GcslOptions& opt = {}) {
  if (!(opt.tau > 0.0 && opt.tau < 0.5)) throw Error(ErrorCode::DomainError, "tau must lie in (0, 1/2)");
  if (ns.size() < 3) throw Error(ErrorCode::DomainError, "the experiment needs at least 3 dimensions");
  for (std::size_t i = 1; i < ns.size(); ++i) {
    if (ns[i] <= ns[i - 1]) throw Error(ErrorCode::DomainError, "dimensions must be strictly ascending");
  }
  const auto sp = Spectrum::from_covariance(kp, opt.grid_points);
  const auto sq = Spectrum::from_covariance(kq, opt.grid_points);
  GcslResult result;
  result.stein_rate = stein_rate(sp, sq);
  if (!(result.stein_rate > 0.0)) throw Error(ErrorCode::DegeneratePair, "spectra are identical");

  std::vector<double> xs, ys;
  for (std::size_t n : ns) {
    result.rows.push_back(gcsl_row(kp, kq, n, result.stein_rate, opt));
    xs.push_back(static_cast<double>(n));
    ys.push_back(result.rows.back().np.beta_log);
  }
  result.fit = exponent_fit(xs, ys);
  result.rel_err = std::abs(result.fit.slope - result.stein_rate) / result.stein_rate;
  return result;
}

}  // namespace gcsl
