#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "gcsl/error.hpp"
#include "gcsl/numlin.hpp"
#include "gcsl/rng.hpp"

namespace gcsl {

// Zero-mean Gaussian law N(0, cov). Eigen-decomposition, symmetric square
// roots, log-determinant and differential entropy are computed once.
class GaussianModel {
 public:
  explicit GaussianModel(SymmetricMatrix cov) : cov_(std::move(cov)) {
    if (cov_.n() == 0) throw Error(ErrorCode::InvalidDimension, "gaussian model needs n >= 1");
    const auto eig = eig_sym(cov_);
    auto roots = mat_sqrt_pair(eig);
    sqrt_cov_ = std::move(roots.sqrt);
    inv_sqrt_cov_ = std::move(roots.inv_sqrt);
    eigenvalues_ = eig.eigenvalues;
    for (double l : eigenvalues_) log_det_ += std::log(l);
    const double dim = static_cast<double>(cov_.n());
    entropy_ = 0.5 * (dim * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det_);
  }

  std::size_t n() const { return cov_.n(); }
  const SymmetricMatrix& cov() const { return cov_; }
  const SymmetricMatrix& sqrt_cov() const { return sqrt_cov_; }
  const SymmetricMatrix& inv_sqrt_cov() const { return inv_sqrt_cov_; }
  std::span<const double> eigenvalues() const { return eigenvalues_; }
  double log_det() const { return log_det_; }
  double entropy() const { return entropy_; }  // nats

  // x^T cov^{-1} x
  double quadratic_form(std::span<const double> x) const {
    check_dimension(x.size());
    const Vector w = multiply(inv_sqrt_cov_.dense(), x);
    double s = 0.0;
    for (double v : w) s += v * v;
    return s;
  }

  void check_dimension(std::size_t size) const {
    if (size != n()) throw Error(ErrorCode::DimensionMismatch, "vector length differs from model dimension");
  }

 private:
  SymmetricMatrix cov_;
  SymmetricMatrix sqrt_cov_;
  SymmetricMatrix inv_sqrt_cov_;
  Vector eigenvalues_;
  double log_det_ = 0.0;
  double entropy_ = 0.0;
};

inline GaussianModel model_from_cov(SymmetricMatrix cov) { return GaussianModel(std::move(cov)); }

inline double log_density(const GaussianModel& m, std::span<const double> x) {
  const double dim = static_cast<double>(m.n());
  return -0.5 * m.quadratic_form(x) - 0.5 * m.log_det() - 0.5 * dim * std::log(2.0 * std::numbers::pi);
}

// count draws x = cov^{1/2} z; chunk c of the output uses stream c of seed.
inline std::vector<Vector> sample(const GaussianModel& m, std::uint64_t seed, std::size_t count) {
  const std::size_t n = m.n();
  auto chunks = map_chunks<std::vector<Vector>>(count, seed, [&](const ChunkRange& r, Engine& eng) {
    std::normal_distribution<double> normal;
    std::vector<Vector> out;
    out.reserve(r.size());
    Vector z(n);
    for (std::size_t i = r.begin; i < r.end; ++i) {
      for (double& v : z) v = normal(eng);
      out.push_back(multiply(m.sqrt_cov().dense(), z));
    }
    return out;
  });
  std::vector<Vector> all;
  all.reserve(count);
  for (auto& c : chunks)
    for (auto& v : c) all.push_back(std::move(v));
  return all;
}

// Relative entropy D(N(0, p) || N(0, q)) in nats:
// 1/2 tr(p q^{-1}) - 1/2 ln(det p / det q) - n/2.
inline double kl_gaussian(const SymmetricMatrix& p, const SymmetricMatrix& q) {
  if (p.n() != q.n()) throw Error(ErrorCode::DimensionMismatch, "covariances differ in dimension");
  const auto pe = eigvals_sym(p);
  require_positive_definite(pe);
  const auto qe = eig_sym(q);
  require_positive_definite(qe.eigenvalues);
  const auto q_inv = spectral_apply(qe, [](double l) { return 1.0 / l; });

  double trace = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i)
    for (std::size_t j = 0; j < p.n(); ++j) trace += p(i, j) * q_inv(i, j);
  double log_ratio = 0.0;
  for (std::size_t k = 0; k < p.n(); ++k) log_ratio += std::log(pe[k]) - std::log(qe.eigenvalues[k]);
  return 0.5 * trace - 0.5 * log_ratio - 0.5 * static_cast<double>(p.n());
}

// Two Gaussian hypotheses together with the linear map M = V^T q^{-1/2} that
// takes q to the identity and p to diag(kappas). kappas are the eigenvalues of
// q^{-1} p, sorted descending.
class HypothesisPair {
 public:
  HypothesisPair(GaussianModel p, GaussianModel q) : p_(std::move(p)), q_(std::move(q)) {
    if (p_.n() != q_.n()) throw Error(ErrorCode::DimensionMismatch, "hypotheses differ in dimension");
    const std::size_t n = p_.n();
    const auto& w = q_.inv_sqrt_cov();
    const auto reduced = congruence(w.dense(), p_.cov());
    const auto eig = eig_sym(reduced);
    require_positive_definite(eig.eigenvalues);

    kappas_.resize(n);
    Matrix vt(n, n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t src = n - 1 - k;
      kappas_[k] = eig.eigenvalues[src];
      for (std::size_t i = 0; i < n; ++i) vt(k, i) = eig.basis(i, src);
    }
    whitener_ = vt * w.dense();

    double kl = 0.0;
    double b2 = 0.0;
    for (double kappa : kappas_) {
      kl += 0.5 * ((kappa - 1.0) - std::log1p(kappa - 1.0));
      b2 += (kappa - 1.0) * (kappa - 1.0);
      log_kappa_sum_ += std::log(kappa);
    }
    kl_ = kl;
    bn_ = std::sqrt(b2);
  }

  std::size_t n() const { return p_.n(); }
  const GaussianModel& p() const { return p_; }
  const GaussianModel& q() const { return q_; }
  std::span<const double> kappas() const { return kappas_; }
  const Matrix& whitener() const { return whitener_; }

  // D^[n] in nats, from the diagonal form 1/2 sum(kappa - 1 - ln kappa).
  double kl() const { return kl_; }

  // B_n = sqrt(sum (kappa_k - 1)^2)
  double bn() const { return bn_; }

  double log_kappa_sum() const { return log_kappa_sum_; }

  // B_n below 1e-10 sqrt(n) is treated as p == q.
  bool degenerate() const { return bn_ <= 1e-10 * std::sqrt(static_cast<double>(n())); }

  void require_nondegenerate() const {
    if (degenerate()) throw Error(ErrorCode::DegeneratePair, "hypotheses are identical");
  }

 private:
  GaussianModel p_;
  GaussianModel q_;
  Vector kappas_;
  Matrix whitener_;
  double kl_ = 0.0;
  double bn_ = 0.0;
  double log_kappa_sum_ = 0.0;
};

inline HypothesisPair whiten(const SymmetricMatrix& cov_p, const SymmetricMatrix& cov_q) {
  return HypothesisPair(GaussianModel(cov_p), GaussianModel(cov_q));
}

// y = M x
inline Vector whiten_vector(const HypothesisPair& pair, std::span<const double> x) {
  pair.p().check_dimension(x.size());
  return multiply(pair.whitener(), x);
}

// ln p(x) - ln q(x) in nats.
inline double llr(const HypothesisPair& pair, std::span<const double> x) {
  return log_density(pair.p(), x) - log_density(pair.q(), x);
}

// Log-likelihood ratio of whitened coordinates y:
// 1/2 sum (1 - 1/kappa_k) y_k^2 - 1/2 sum ln kappa_k.
inline double llr_whitened(const HypothesisPair& pair, std::span<const double> y) {
  pair.p().check_dimension(y.size());
  const auto kappas = pair.kappas();
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) s += (1.0 - 1.0 / kappas[k]) * y[k] * y[k];
  return 0.5 * s - 0.5 * pair.log_kappa_sum();
}

enum class Hypothesis { P, Q };

// Draws count log-likelihood ratios with x distributed under the chosen
// hypothesis. The ratio is invariant under the whitening map, so draws are made
// in whitened coordinates: y_k = sqrt(kappa_k) z_k under p and y_k = z_k under q.
inline std::vector<double> llr_samples(const HypothesisPair& pair, Hypothesis under, std::uint64_t seed,
                                       std::size_t count) {
  const auto kappas = pair.kappas();
  Vector coeff(kappas.size());
  for (std::size_t k = 0; k < kappas.size(); ++k) {
    coeff[k] = under == Hypothesis::P ? 0.5 * (kappas[k] - 1.0) : 0.5 * (1.0 - 1.0 / kappas[k]);
  }
  const double offset = -0.5 * pair.log_kappa_sum();
  auto chunks = map_chunks<std::vector<double>>(count, seed, [&](const ChunkRange& r, Engine& eng) {
    std::normal_distribution<double> normal;
    std::vector<double> out(r.size());
    for (double& value : out) {
      double s = 0.0;
      for (double c : coeff) {
        const double z = normal(eng);
        s += c * z * z;
      }
      value = s + offset;
    }
    return out;
  });
  std::vector<double> all;
  all.reserve(count);
  for (const auto& c : chunks) all.insert(all.end(), c.begin(), c.end());
  return all;
}

// Draws count values of -ln m(x), x ~ m. With x = cov^{1/2} z the quadratic
// form reduces to |z|^2.
inline std::vector<double> neg_log_density_samples(const GaussianModel& m, std::uint64_t seed, std::size_t count) {
  const std::size_t n = m.n();
  const double offset = 0.5 * m.log_det() + 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  auto chunks = map_chunks<std::vector<double>>(count, seed, [&](const ChunkRange& r, Engine& eng) {
    std::normal_distribution<double> normal;
    std::vector<double> out(r.size());
    for (double& value : out) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double z = normal(eng);
        s += z * z;
      }
      value = 0.5 * s + offset;
    }
    return out;
  });
  std::vector<double> all;
  all.reserve(count);
  for (const auto& c : chunks) all.insert(all.end(), c.begin(), c.end());
  return all;
}

}  // namespace gcsl
