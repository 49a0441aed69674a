#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gcsl/error.hpp"

namespace gcsl {

// Geometric auto-covariance K[m] = scale * ratio^|m|.
struct GeometricTail {
  double ratio = 0.0;
  double scale = 1.0;
};

// Symmetric, absolutely summable auto-covariance of a stationary process.
// Lags beyond the stored support are zero; geometric sequences are stored up
// to the first lag whose magnitude drops below kTailCutoff * K[0].
class CovarianceSequence {
 public:
  static constexpr double kTailCutoff = 1e-14;

  static CovarianceSequence white(double variance = 1.0) {
    return table({variance});
  }

  static CovarianceSequence geometric(double ratio, double scale = 1.0) {
    if (!(std::abs(ratio) < 1.0)) {
      throw Error(ErrorCode::DomainError, "geometric covariance needs |ratio| < 1");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw Error(ErrorCode::DomainError, "geometric covariance needs a positive scale");
    }
    std::vector<double> lags{scale};
    double term = scale;
    while (true) {
      term *= ratio;
      if (std::abs(term) < kTailCutoff * scale) break;
      lags.push_back(term);
    }
    CovarianceSequence seq(std::move(lags));
    seq.tail_ = GeometricTail{ratio, scale};
    // Two-sided sum of the untruncated sequence.
    seq.abs_sum_ = scale * (1.0 + std::abs(ratio)) / (1.0 - std::abs(ratio));
    return seq;
  }

  // lags[m] = K[m] for m = 0..size-1.
  static CovarianceSequence table(std::vector<double> lags) {
    if (lags.empty()) {
      throw Error(ErrorCode::DomainError, "covariance table is empty");
    }
    for (double v : lags) {
      if (!std::isfinite(v)) throw Error(ErrorCode::DomainError, "covariance table has non-finite entries");
    }
    if (!(lags.front() > 0.0)) {
      throw Error(ErrorCode::DomainError, "K[0] must be positive");
    }
    return CovarianceSequence(std::move(lags));
  }

  double operator[](std::ptrdiff_t lag) const {
    const auto m = static_cast<std::size_t>(lag < 0 ? -lag : lag);
    return m < lags_.size() ? lags_[m] : 0.0;
  }

  // Number of stored (possibly nonzero) lags, starting at lag 0.
  std::size_t support() const { return lags_.size(); }
  std::span<const double> values() const { return lags_; }
  const std::optional<GeometricTail>& tail() const { return tail_; }

  // Sum of |K[m]| over all integer lags m.
  double abs_sum() const { return abs_sum_; }

  // Sum of |K[m]| over m >= 0.
  double one_sided_abs_sum() const { return 0.5 * (abs_sum_ + std::abs(lags_.front())); }

  bool is_white() const { return lags_.size() == 1; }

 private:
  explicit CovarianceSequence(std::vector<double> lags) : lags_(std::move(lags)) {
    abs_sum_ = std::abs(lags_.front());
    for (std::size_t m = 1; m < lags_.size(); ++m) abs_sum_ += 2.0 * std::abs(lags_[m]);
  }

  std::vector<double> lags_;
  std::optional<GeometricTail> tail_;
  double abs_sum_ = 0.0;
};

}  // namespace gcsl
