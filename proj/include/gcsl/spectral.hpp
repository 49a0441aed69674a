#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "gcsl/covariance.hpp"
#include "gcsl/error.hpp"
#include "gcsl/numlin.hpp"

namespace gcsl {

inline constexpr std::size_t kDefaultGridPoints = 4097;

namespace detail {

inline double two_pi() { return 2.0 * std::numbers::pi; }

// Full DTFT of K at frequency f. Geometric sequences use the closed form.
inline double covariance_dtft(const CovarianceSequence& k, double f) {
  if (const auto& tail = k.tail()) {
    const double r = tail->ratio;
    return tail->scale * (1.0 - r * r) / (1.0 - 2.0 * r * std::cos(two_pi() * f) + r * r);
  }
  const auto lags = k.values();
  double s = lags[0];
  for (std::size_t m = 1; m < lags.size(); ++m) s += 2.0 * lags[m] * std::cos(two_pi() * f * static_cast<double>(m));
  return s;
}

}  // namespace detail

// Power spectrum S(e^{j2 pi f}) on f in [0, 1], tabulated on a uniform grid of
// odd size for Simpson quadrature. Bounds come from the grid scan.
class Spectrum {
 public:
  Spectrum(std::function<double(double)> evaluator, std::size_t grid_points = kDefaultGridPoints)
      : eval_(std::move(evaluator)) {
    if (grid_points < 3 || grid_points % 2 == 0) {
      throw Error(ErrorCode::DomainError, "spectral grid needs an odd number of points >= 3");
    }
    grid_.resize(grid_points);
    const double step = 1.0 / static_cast<double>(grid_points - 1);
    for (std::size_t i = 0; i < grid_points; ++i) {
      const double v = eval_(static_cast<double>(i) * step);
      if (!std::isfinite(v)) throw Error(ErrorCode::NumericalFailure, "spectrum is not finite on the grid");
      grid_[i] = v;
    }
    auto [lo, hi] = std::minmax_element(grid_.begin(), grid_.end());
    lower_ = *lo;
    upper_ = *hi;
    if (!(lower_ > 0.0)) {
      throw Error(ErrorCode::DomainError, "spectrum must be strictly positive on the grid");
    }
  }

  static Spectrum from_covariance(const CovarianceSequence& k, std::size_t grid_points = kDefaultGridPoints) {
    return Spectrum([k](double f) { return detail::covariance_dtft(k, f); }, grid_points);
  }

  static Spectrum constant(double level, std::size_t grid_points = kDefaultGridPoints) {
    return Spectrum([level](double) { return level; }, grid_points);
  }

  double operator()(double f) const { return eval_(f); }

  double lower_bound() const { return lower_; }
  double upper_bound() const { return upper_; }
  std::size_t grid_points() const { return grid_.size(); }
  std::span<const double> grid_values() const { return grid_; }

 private:
  std::function<double(double)> eval_;
  std::vector<double> grid_;
  double lower_ = 0.0;
  double upper_ = 0.0;
};

// Truncated real cosine sum S^[n](f): lags |m| <= floor(n/2) for odd n; for
// even n the window is -n/2+1..n/2, whose unpaired lag n/2 contributes
// K[n/2] cos(pi f n) to the real part.
inline double spectrum_partial(const CovarianceSequence& k, std::size_t n, double f) {
  if (n < 3) throw Error(ErrorCode::InvalidDimension, "partial spectrum needs n >= 3");
  const std::size_t half = n / 2;
  const std::size_t paired = (n % 2 == 1) ? half : half - 1;
  const double w = detail::two_pi() * f;
  double s = k[0];
  for (std::size_t m = 1; m <= paired; ++m) s += 2.0 * k[static_cast<std::ptrdiff_t>(m)] * std::cos(w * static_cast<double>(m));
  if (n % 2 == 0) s += k[static_cast<std::ptrdiff_t>(half)] * std::cos(w * static_cast<double>(half));
  return s;
}

// Eigenvalues of circulant_from_cov(k, n) in DFT order k = 0..n-1.
inline Vector circulant_eigs(const CovarianceSequence& k, std::size_t n) {
  if (n < 3) throw Error(ErrorCode::InvalidDimension, "circulant eigenvalues need n >= 3");
  Vector beta(n);
  for (std::size_t i = 0; i < n; ++i) {
    beta[i] = spectrum_partial(k, n, static_cast<double>(i) / static_cast<double>(n));
  }
  return beta;
}

namespace detail {

// Composite Simpson over a uniform grid on [0, 1].
inline double simpson(std::span<const double> y) {
  const std::size_t last = y.size() - 1;
  double s = y.front() + y.back();
  for (std::size_t i = 1; i < last; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * y[i];
  return s / (3.0 * static_cast<double>(last));
}

template <typename F>
double integrate_grid(std::span<const double> grid, F&& integrand) {
  std::vector<double> y(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    y[i] = integrand(grid[i]);
    if (!std::isfinite(y[i])) throw Error(ErrorCode::NumericalFailure, "integrand is not finite on the grid");
  }
  return simpson(y);
}

inline constexpr double kMinRatio = 1e-12;
inline constexpr double kMaxRatio = 1e12;

inline std::vector<double> spectral_ratio(const Spectrum& sp, const Spectrum& sq) {
  if (sp.grid_points() != sq.grid_points()) {
    throw Error(ErrorCode::DimensionMismatch, "spectra use different grids");
  }
  auto p = sp.grid_values();
  auto q = sq.grid_values();
  std::vector<double> r(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    r[i] = p[i] / q[i];
    if (!(r[i] >= kMinRatio && r[i] <= kMaxRatio)) {
      throw Error(ErrorCode::IllConditionedSpectra, "spectral ratio outside [1e-12, 1e12]");
    }
  }
  return r;
}

}  // namespace detail

// Integral over f in [0, 1] of F(S(f)).
template <typename F>
double spectral_integral(F&& fn, const Spectrum& s) {
  return detail::integrate_grid(s.grid_values(), std::forward<F>(fn));
}

// Per-sample Stein rate (nats): 1/2 * integral of (r - ln r - 1), r = S_p/S_q.
inline double stein_rate(const Spectrum& sp, const Spectrum& sq) {
  const auto r = detail::spectral_ratio(sp, sq);
  return detail::integrate_grid(r, [](double x) { return 0.5 * ((x - 1.0) - std::log1p(x - 1.0)); });
}

// lim B_n / sqrt(n) = sqrt(integral of (S_p/S_q - 1)^2).
inline double bn_limit(const Spectrum& sp, const Spectrum& sq) {
  const auto r = detail::spectral_ratio(sp, sq);
  return std::sqrt(detail::integrate_grid(r, [](double x) { return (x - 1.0) * (x - 1.0); }));
}

template <typename F>
double eig_functional_avg(F&& fn, std::span<const double> eigs) {
  if (eigs.empty()) return 0.0;
  double s = 0.0;
  for (double e : eigs) s += fn(e);
  return s / static_cast<double>(eigs.size());
}

// Toeplitz (T), banded (B) and circulant (C) approximations at one size.
struct AsymEquivRow {
  std::size_t n = 0;
  double weak_toeplitz_banded = 0.0;
  double weak_banded_circulant = 0.0;
  double weak_toeplitz_circulant = 0.0;
  double strong_toeplitz = 0.0;
  double strong_banded = 0.0;
  double strong_circulant = 0.0;
  double strong_bound = 0.0;  // 2 * sum over all lags of |K[m]|
};

inline AsymEquivRow asym_equiv_row(const CovarianceSequence& k, std::size_t n) {
  const auto t = toeplitz_from_cov(k, n);
  const auto b = banded_from_cov(k, n);
  const auto c = circulant_from_cov(k, n);
  AsymEquivRow row;
  row.n = n;
  row.weak_toeplitz_banded = weak_norm(t.dense() - b.dense());
  row.weak_banded_circulant = weak_norm(b.dense() - c.dense());
  row.weak_toeplitz_circulant = weak_norm(t.dense() - c.dense());
  row.strong_toeplitz = strong_norm(t);
  row.strong_banded = strong_norm(b);
  row.strong_circulant = strong_norm(c);
  row.strong_bound = 2.0 * k.abs_sum();
  return row;
}

inline std::vector<AsymEquivRow> asym_equiv_report(const CovarianceSequence& k, std::span<const std::size_t> ns) {
  std::vector<AsymEquivRow> rows;
  rows.reserve(ns.size());
  for (std::size_t n : ns) rows.push_back(asym_equiv_row(k, n));
  return rows;
}

}  // namespace gcsl
