#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "gcsl/covariance.hpp"
#include "gcsl/error.hpp"

namespace gcsl {

using Vector = std::vector<double>;

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const { return data_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::DimensionMismatch, "matrix product shapes differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::DimensionMismatch, "matrix difference shapes differ");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

inline Vector multiply(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw Error(ErrorCode::DimensionMismatch, "matrix-vector shapes differ");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    y[i] = std::inner_product(r.begin(), r.end(), x.begin(), 0.0);
  }
  return y;
}

// Square matrix whose entries satisfy a(i,j) == a(j,i) exactly.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(std::size_t n) : m_(n, n) {}

  static SymmetricMatrix identity(std::size_t n) { return diagonal(Vector(n, 1.0)); }

  static SymmetricMatrix diagonal(std::span<const double> d) {
    SymmetricMatrix s(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) s.set(i, i, d[i]);
    return s;
  }

  // Rejects input that is not exactly symmetric or has non-finite entries.
  static SymmetricMatrix from_dense(const Matrix& m) {
    check_square(m);
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) {
        if (!std::isfinite(m(i, j))) throw Error(ErrorCode::DomainError, "matrix has non-finite entries");
        if (m(i, j) != m(j, i)) throw Error(ErrorCode::DomainError, "matrix is not symmetric");
      }
    SymmetricMatrix s;
    s.m_ = m;
    return s;
  }

  // Averages (a + a^T)/2; for products that are symmetric up to rounding.
  static SymmetricMatrix symmetrize(const Matrix& m) {
    check_square(m);
    SymmetricMatrix s(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = i; j < m.cols(); ++j) {
        const double v = 0.5 * (m(i, j) + m(j, i));
        if (!std::isfinite(v)) throw Error(ErrorCode::DomainError, "matrix has non-finite entries");
        s.set(i, j, v);
      }
    return s;
  }

  std::size_t n() const { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

  void set(std::size_t i, std::size_t j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }

  const Matrix& dense() const { return m_; }

 private:
  static void check_square(const Matrix& m) {
    if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "matrix is not square");
  }

  Matrix m_;
};

inline SymmetricMatrix operator-(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  return SymmetricMatrix::from_dense(a.dense() - b.dense());
}

inline SymmetricMatrix scaled(const SymmetricMatrix& a, double c) {
  SymmetricMatrix s(a.n());
  for (std::size_t i = 0; i < a.n(); ++i)
    for (std::size_t j = i; j < a.n(); ++j) s.set(i, j, c * a(i, j));
  return s;
}

// a * s * a^T, symmetrized against rounding.
inline SymmetricMatrix congruence(const Matrix& a, const SymmetricMatrix& s) {
  return SymmetricMatrix::symmetrize(a * s.dense() * a.transposed());
}

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Covariance matrix constructions

inline SymmetricMatrix toeplitz_from_cov(const CovarianceSequence& k, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidDimension, "toeplitz dimension must be >= 1");
  SymmetricMatrix t(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) t.set(i, j, k[static_cast<std::ptrdiff_t>(j - i)]);
  return t;
}

// Half-window n^ = floor(n/2) + 1 shared by the banded and circulant templates.
inline std::size_t half_window(std::size_t n) { return n / 2 + 1; }

// Symmetric circulant whose first row is K[min(j, n-j)]: lags 0..n^-1 followed
// by the mirrored lags (n^-2..1 for even n, n^-1..1 for odd n).
inline SymmetricMatrix circulant_from_cov(const CovarianceSequence& k, std::size_t n) {
  if (n < 3) throw Error(ErrorCode::InvalidDimension, "circulant dimension must be >= 3");
  Vector first(n);
  for (std::size_t j = 0; j < n; ++j) first[j] = k[static_cast<std::ptrdiff_t>(std::min(j, n - j))];
  SymmetricMatrix c(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) c.set(i, j, first[(j + n - i) % n]);
  return c;
}

// Toeplitz with lags >= n^ zeroed.
inline SymmetricMatrix banded_from_cov(const CovarianceSequence& k, std::size_t n) {
  if (n < 3) throw Error(ErrorCode::InvalidDimension, "banded dimension must be >= 3");
  const std::size_t band = half_window(n);
  SymmetricMatrix b(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n && j - i < band; ++j) b.set(i, j, k[static_cast<std::ptrdiff_t>(j - i)]);
  return b;
}

// ---------------------------------------------------------------------------
// Eigen-decomposition

struct EigenDecomposition {
  Vector eigenvalues;  // ascending
  Matrix basis;        // column k is the eigenvector of eigenvalues[k]
};

enum class EigenMethod {
  TridiagonalQL,  // Householder reduction + implicit QL
  Jacobi,         // cyclic Jacobi rotations
};

struct EigenOptions {
  EigenMethod method = EigenMethod::TridiagonalQL;
  // Jacobi stops once the off-diagonal Frobenius norm is below this times ||M||_F.
  double relative_tolerance = 1e-12;
  int max_sweeps = 100;
  int max_ql_iterations = 60;  // per eigenvalue
};

namespace detail {

// Cyclic Jacobi in round-robin order: each sweep visits every (p, q) pair once,
// grouped into n-1 rounds of disjoint pairs so that a whole round is applied
// as one row pass and one column pass over the matrix. Rows of vt accumulate
// the rotated basis, i.e. vt = V^T.
inline void jacobi_sweeps(Matrix& a, Matrix* vt, const EigenOptions& opt) {
  const std::size_t n = a.rows();
  if (n < 2) return;
  const double threshold = opt.relative_tolerance * frobenius_norm(a);
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  struct Rotation {
    std::size_t p, q;
    double c, s;
  };
  // Odd n gets a phantom player n whose pairs are dropped.
  const std::size_t players = n + (n % 2);
  std::vector<std::size_t> seat(players);
  std::iota(seat.begin(), seat.end(), 0);
  std::vector<Rotation> round;
  round.reserve(players / 2);

  for (int sweep = 0;; ++sweep) {
    const double off = off_norm();
    if (off <= threshold) return;
    if (sweep >= opt.max_sweeps) {
      throw Error(ErrorCode::NumericalFailure, "jacobi eigen-solver did not converge");
    }
    // Entries far below the current off-diagonal mass wait for later sweeps.
    const double skip = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;

    for (std::size_t r = 0; r + 1 < players; ++r) {
      round.clear();
      for (std::size_t i = 0; i < players / 2; ++i) {
        std::size_t p = seat[i];
        std::size_t q = seat[players - 1 - i];
        if (p >= n || q >= n) continue;
        if (p > q) std::swap(p, q);
        const double apq = a(p, q);
        if (apq == 0.0 || std::abs(apq) <= skip) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        round.push_back({p, q, c, t * c});
      }
      std::rotate(seat.begin() + 1, seat.end() - 1, seat.end());
      if (round.empty()) continue;

      std::vector<std::pair<double, double>> block(round.size());
      for (std::size_t i = 0; i < round.size(); ++i) {
        const auto& g = round[i];
        const double apq = a(g.p, g.q);
        const double t = g.s / g.c;
        block[i] = {a(g.p, g.p) - t * apq, a(g.q, g.q) + t * apq};
      }
      auto rotate_rows = [&](Matrix& m) {
        for (const auto& g : round) {
          auto rp = m.row(g.p);
          auto rq = m.row(g.q);
          for (std::size_t k = 0; k < rp.size(); ++k) {
            const double x = rp[k];
            const double y = rq[k];
            rp[k] = g.c * x - g.s * y;
            rq[k] = g.s * x + g.c * y;
          }
        }
      };
      rotate_rows(a);
      for (std::size_t k = 0; k < n; ++k) {
        auto rk = a.row(k);
        for (const auto& g : round) {
          const double x = rk[g.p];
          const double y = rk[g.q];
          rk[g.p] = g.c * x - g.s * y;
          rk[g.q] = g.s * x + g.c * y;
        }
      }
      for (std::size_t i = 0; i < round.size(); ++i) {
        const auto& g = round[i];
        a(g.p, g.p) = block[i].first;
        a(g.q, g.q) = block[i].second;
        a(g.p, g.q) = 0.0;
        a(g.q, g.p) = 0.0;
      }
      if (vt != nullptr) rotate_rows(*vt);
    }
    // Row and column passes round differently; restore exact symmetry.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = 0.5 * (a(i, j) + a(j, i));
        a(i, j) = v;
        a(j, i) = v;
      }
  }
}


// Householder reduction of the symmetric matrix held in v to tridiagonal form
// (diagonal d, subdiagonal e[1..n-1]). With accumulate set, v is overwritten
// with the orthogonal transformation; otherwise its contents are scratch.
inline void householder_tridiagonalize(Matrix& v, Vector& d, Vector& e, bool accumulate = true) {
  const std::size_t n = v.rows();
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (std::size_t k = j + 1; k < i; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k < i; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  if (!accumulate) {
    for (std::size_t j = 0; j < n; ++j) d[j] = v(j, j);
    e[0] = 0.0;
    return;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit QL with Wilkinson-style shifts on the tridiagonal (d, e). Rows of
// zt hold the basis vectors and are rotated alongside (zt = V^T).
inline void tridiagonal_ql(Vector& d, Vector& e, Matrix* zt, int max_iterations) {
  const std::size_t n = d.size();
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n - 1 && std::abs(e[m]) > eps * tst1) ++m;

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > max_iterations) {
          throw Error(ErrorCode::NumericalFailure, "tridiagonal QL did not converge");
        }
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = m; i-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          if (zt != nullptr) {
            auto zi = zt->row(i);
            auto zi1 = zt->row(i + 1);
            for (std::size_t k = 0; k < n; ++k) {
              const double a = zi1[k];
              zi1[k] = s * zi[k] + c * a;
              zi[k] = c * zi[k] - s * a;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

}  // namespace detail

namespace detail {

inline EigenDecomposition sorted_decomposition(const Vector& values, const Matrix& vt) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = values[order[k]];
    auto v = vt.row(order[k]);
    for (std::size_t i = 0; i < n; ++i) out.basis(i, k) = v[i];
  }
  return out;
}

inline void require_finite(const SymmetricMatrix& m) {
  for (double v : m.dense().data())
    if (!std::isfinite(v)) throw Error(ErrorCode::DomainError, "matrix has non-finite entries");
}

}  // namespace detail

inline EigenDecomposition eig_sym(const SymmetricMatrix& m, const EigenOptions& opt = {}) {
  detail::require_finite(m);
  const std::size_t n = m.n();
  if (n == 0) return {};
  if (opt.method == EigenMethod::Jacobi) {
    Matrix a = m.dense();
    Matrix vt = Matrix::identity(n);
    detail::jacobi_sweeps(a, &vt, opt);
    Vector values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
    return detail::sorted_decomposition(values, vt);
  }
  Matrix v = m.dense();
  Vector d, e;
  detail::householder_tridiagonalize(v, d, e);
  Matrix vt = v.transposed();
  detail::tridiagonal_ql(d, e, &vt, opt.max_ql_iterations);
  return detail::sorted_decomposition(d, vt);
}

// Eigenvalues only, ascending.
inline Vector eigvals_sym(const SymmetricMatrix& m, const EigenOptions& opt = {}) {
  detail::require_finite(m);
  const std::size_t n = m.n();
  Vector ev;
  if (n == 0) return ev;
  if (opt.method == EigenMethod::Jacobi) {
    Matrix a = m.dense();
    detail::jacobi_sweeps(a, nullptr, opt);
    ev.resize(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  } else {
    Matrix v = m.dense();
    Vector e;
    detail::householder_tridiagonalize(v, ev, e, false);
    detail::tridiagonal_ql(ev, e, nullptr, opt.max_ql_iterations);
  }
  std::sort(ev.begin(), ev.end());
  return ev;
}

// basis * diag(f(eigenvalue)) * basis^T
template <typename F>
SymmetricMatrix spectral_apply(const EigenDecomposition& e, F&& f) {
  const std::size_t n = e.eigenvalues.size();
  Matrix scaled_basis(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) scaled_basis(i, k) = e.basis(i, k) * f(e.eigenvalues[k]);
  return SymmetricMatrix::symmetrize(scaled_basis * e.basis.transposed());
}

// Rejects lambda_min <= pd_tolerance * lambda_max.
inline constexpr double kPdTolerance = 1e-12;

inline void require_positive_definite(std::span<const double> ascending_eigs) {
  if (ascending_eigs.empty()) throw Error(ErrorCode::InvalidDimension, "empty matrix");
  const double lo = ascending_eigs.front();
  const double hi = ascending_eigs.back();
  if (!(hi > 0.0) || !(lo > kPdTolerance * hi)) {
    throw Error(ErrorCode::NotPositiveDefinite, "matrix is not positive definite");
  }
}

struct SqrtPair {
  SymmetricMatrix sqrt;
  SymmetricMatrix inv_sqrt;
};

inline SqrtPair mat_sqrt_pair(const EigenDecomposition& e) {
  require_positive_definite(e.eigenvalues);
  return {spectral_apply(e, [](double l) { return std::sqrt(l); }),
          spectral_apply(e, [](double l) { return 1.0 / std::sqrt(l); })};
}

inline SqrtPair mat_sqrt_pair(const SymmetricMatrix& m) { return mat_sqrt_pair(eig_sym(m)); }

// ---------------------------------------------------------------------------
// Norms

// sqrt((1/n) sum_kj |a_kj|^2)
inline double weak_norm(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return frobenius_norm(m) / std::sqrt(static_cast<double>(m.rows()));
}
inline double weak_norm(const SymmetricMatrix& m) { return weak_norm(m.dense()); }

// l2 operator norm; max |eigenvalue| for symmetric input.
inline double strong_norm(const SymmetricMatrix& m) {
  if (m.n() == 0) return 0.0;
  const Vector ev = eigvals_sym(m);
  return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

// Maximum absolute row sum.
inline double inf_norm(const Matrix& m) {
  double best = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (double v : m.row(i)) s += std::abs(v);
    best = std::max(best, s);
  }
  return best;
}

}  // namespace gcsl
