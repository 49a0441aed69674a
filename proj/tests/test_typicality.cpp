#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gcsl/spectral.hpp"
#include "gcsl/typicality.hpp"
#include "oracles.hpp"

using namespace gcsl;

namespace {

// Q^{-1}(0.025), from tables.
const double kZ975 = 1.959963984540054;

HypothesisPair geometric_vs_white(double r, std::size_t n) {
  return whiten(toeplitz_from_cov(CovarianceSequence::geometric(r), n), SymmetricMatrix::identity(n));
}

HypothesisPair diagonal_pair(const Vector& kappas) {
  return whiten(SymmetricMatrix::diagonal(kappas), SymmetricMatrix::identity(kappas.size()));
}

}  // namespace

TEST(QFunction, Values) {
  EXPECT_DOUBLE_EQ(qfunc(0.0), 0.5);
  EXPECT_NEAR(qfunc_inv(0.5), 0.0, 1e-12);
  EXPECT_NEAR(qfunc(1.281552), 0.1, 1e-7);
  EXPECT_NEAR(qfunc_inv(0.025), kZ975, 1e-10);
  EXPECT_NEAR(normal_cdf(1.0) + qfunc(1.0), 1.0, 1e-15);
}

TEST(QFunction, InverseRoundTripAndMonotone) {
  for (double p : {1e-300, 1e-20, 1e-8, 0.001, 0.2, 0.5, 0.77, 0.999, 1 - 1e-12}) {
    const double x = qfunc_inv(p);
    EXPECT_LE(std::abs(qfunc(x) - p), 1e-10 * std::max(p, 1e-2)) << p;
  }
  double prev = qfunc(-8.0);
  for (double x = -7.9; x < 8; x += 0.1) {
    const double v = qfunc(x);
    EXPECT_LT(v, prev);
    prev = v;
  }
  for (double bad : {0.0, 1.0, -0.1, 2.0, double(NAN)}) EXPECT_THROW(qfunc_inv(bad), Error);
}

TEST(Families, Evaluate) {
  EXPECT_DOUBLE_EQ(evaluate(ConstantFamily{2.5}, 100), 2.5);
  EXPECT_DOUBLE_EQ(evaluate(LinearFamily{0.1}, 50), 5.0);
  EXPECT_DOUBLE_EQ(evaluate(SqrtScaledFamily{3.0}, 16), 12.0);
  EXPECT_DOUBLE_EQ(evaluate(BnScaledFamily{2.0, [](std::size_t n) { return 0.5 * n; }}, 10), 10.0);
  const TableFamily t{{{10, 1.0}, {20, 3.0}}};
  EXPECT_DOUBLE_EQ(evaluate(t, 15), 2.0);
  EXPECT_DOUBLE_EQ(evaluate(t, 5), 1.0);
  EXPECT_DOUBLE_EQ(evaluate(t, 40), 3.0);
  EXPECT_THROW(evaluate(ConstantFamily{-1.0}, 3), Error);
}

TEST(Families, Classification) {
  EXPECT_EQ(family_class(LinearFamily{0.01}).cls, FamilyClass::GoodForAllConstants);
  EXPECT_EQ(family_class(ConstantFamily{5}).cls, FamilyClass::Not);
  EXPECT_EQ(family_class(SqrtScaledFamily{5}).cls, FamilyClass::Not);
  EXPECT_FALSE(family_class(LinearFamily{0.01}).heuristic);
  TableFamily linear_table, sqrt_table;
  for (std::size_t n = 16; n <= 4096; n *= 2) {
    linear_table.entries.push_back({n, 0.2 * n});
    sqrt_table.entries.push_back({n, 3 * std::sqrt(double(n))});
  }
  const auto lc = family_class(linear_table);
  EXPECT_EQ(lc.cls, FamilyClass::GoodForAllConstants);
  EXPECT_TRUE(lc.heuristic);
  EXPECT_EQ(family_class(sqrt_table).cls, FamilyClass::Not);
}

TEST(EntropySet, Membership) {
  const GaussianModel m(SymmetricMatrix::identity(4));
  const Vector on_center{1, -1, 1, -1};
  EXPECT_TRUE(entropy_typical_member(m, 1e-9, on_center));
  EXPECT_FALSE(entropy_typical_member(m, 1.9, Vector{0, 0, 0, 0}));
  EXPECT_TRUE(entropy_typical_member(m, 2.1, Vector{0, 0, 0, 0}));
  EXPECT_THROW(entropy_typical_member(m, 0.0, on_center), Error);
}

TEST(EntropySet, DensityAndQuadraticFormsAgree) {
  const GaussianModel m(toeplitz_from_cov(CovarianceSequence::geometric(0.6), 12));
  const auto xs = sample(m, 77, 2000);
  std::size_t members = 0;
  for (const auto& x : xs) {
    const double dev = std::abs(-log_density(m, x) - m.entropy());
    if (std::abs(dev - 1.5) < 1e-9) continue;
    const bool a = entropy_typical_member(m, 1.5, x);
    EXPECT_EQ(a, entropy_typical_member_quadratic(m, 1.5, x));
    if (a) {
      ++members;
      const double density = std::exp(log_density(m, x));
      EXPECT_GE(density, std::exp(-(m.entropy() + 1.5)) * (1 - 1e-12));
      EXPECT_LE(density, std::exp(-(m.entropy() - 1.5)) * (1 + 1e-12));
    }
  }
  EXPECT_GT(members, 100u);
}

TEST(RelativeSet, Membership) {
  const auto pair = geometric_vs_white(0.5, 6);
  const auto xs = sample(pair.p(), 5, 2000);
  std::size_t members = 0;
  for (const auto& x : xs) {
    EXPECT_TRUE(rel_typical_member(pair, 1e9, x));
    const bool a = rel_typical_member(pair, 0.8, x);
    const double dev = std::abs(llr(pair, x) - pair.kl());
    if (std::abs(dev - 0.8) < 1e-8) continue;
    EXPECT_EQ(a, rel_typical_member_whitened(pair, 0.8, whiten_vector(pair, x)));
    if (a) {
      ++members;
      const double lp = log_density(pair.p(), x);
      const double lq = log_density(pair.q(), x);
      EXPECT_GE(lq, lp - (pair.kl() + 0.8) - 1e-10);
      EXPECT_LE(lq, lp - (pair.kl() - 0.8) + 1e-10);
    }
  }
  EXPECT_GT(members, 100u);
}

TEST(RelativeSet, CenterIsMember) {
  const auto pair = diagonal_pair({2.0, 0.5});
  // llr(y) = D where sum (1 - 1/k) y^2 = 2D + sum ln k; put all mass on y_0.
  const double y0 = std::sqrt((2 * pair.kl() + pair.log_kappa_sum()) / (1 - 1 / pair.kappas()[0]));
  EXPECT_TRUE(rel_typical_member(pair, 1e-9, Vector{y0, 0.0}));
}

TEST(Thresholds, Iid) {
  EXPECT_NEAR(good_delta_iid(1.0, 4, 0.05), 2 * kZ975, 1e-9);
  EXPECT_NEAR(good_delta_iid(1.0, 4, 0.05), 3.919928, 1e-6);
  EXPECT_NEAR(good_delta_iid(2.0, 7, 1.0), 0.0, 1e-12);
  EXPECT_NEAR(good_delta_iid(1.0, 400, 0.1) / good_delta_iid(1.0, 100, 0.1), 2.0, 1e-12);
  EXPECT_THROW(good_delta_iid(0.0, 4, 0.1), Error);
  EXPECT_THROW(good_delta_iid(1.0, 4, 0.0), Error);
}

TEST(Thresholds, WhiteGaussian) {
  EXPECT_NEAR(good_delta_white_gaussian(2, 0.05), kZ975, 1e-9);
  EXPECT_NEAR(good_delta_white_gaussian(2, 0.05), 1.959964, 1e-6);
  EXPECT_NEAR(good_delta_white_gaussian(9, 1.0), 0.0, 1e-12);
  // sigma^2 = Var(-ln p(X_1)) = Var(X_1^2 / 2) = 1/2
  for (std::size_t n : {1, 10, 256}) EXPECT_NEAR(good_delta_white_gaussian(n, 0.05), good_delta_iid(std::sqrt(0.5), n, 0.05), 1e-12);
}

TEST(Thresholds, Correlated) {
  const auto pair = diagonal_pair({2.0, 2.0});
  const auto t = good_delta_correlated(pair, 0.05);
  EXPECT_NEAR(t.bn, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(t.delta, kZ975, 1e-9);
  try {
    good_delta_correlated(diagonal_pair({1.0, 1.0, 1.0}), 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegeneratePair);
  }
}

TEST(Thresholds, EqualKappasMatchWhite) {
  // kappa_k = 2 for every k gives B_n = sqrt(n).
  for (std::size_t n : {3, 16}) {
    const auto pair = diagonal_pair(Vector(n, 2.0));
    EXPECT_NEAR(good_delta_correlated(pair, 0.1).delta, good_delta_white_gaussian(n, 0.1), 1e-9);
  }
}

TEST(Thresholds, DecreasingInEps) {
  const auto pair = geometric_vs_white(0.5, 32);
  double prev = INFINITY;
  for (double eps : {0.01, 0.05, 0.1, 0.3, 0.9}) {
    const double d = good_delta_correlated(pair, eps).delta;
    EXPECT_LT(d, prev);
    EXPECT_LT(good_delta_white_gaussian(32, eps), good_delta_white_gaussian(32, eps / 2));
    prev = d;
  }
}

TEST(Thresholds, BnOverSqrtNApproachesLimit) {
  const auto kp = CovarianceSequence::geometric(0.5);
  const double limit = bn_limit(Spectrum::from_covariance(kp), Spectrum::constant(1.0));
  auto gap = [&](std::size_t n) {
    return std::abs(geometric_vs_white(0.5, n).bn() / std::sqrt(double(n)) - limit);
  };
  EXPECT_LT(gap(512), gap(64));
  EXPECT_LT(gap(512), 0.02);
}

TEST(MonteCarlo, HugeDeltaGivesOne) {
  const GaussianModel m(SymmetricMatrix::identity(8));
  const auto est = mc_typical_prob(TypicalSetSpec::entropy(m, 10 * (std::abs(m.entropy()) + 8)), 2000, 1);
  EXPECT_EQ(est.estimate, 1.0);
  EXPECT_EQ(est.std_error, 0.0);
  EXPECT_THROW(mc_typical_prob(TypicalSetSpec::entropy(m, 1.0), 999, 1), Error);
  EXPECT_THROW(TypicalSetSpec::entropy(m, 0.0), Error);
}

TEST(MonteCarlo, MinimalThresholdsAreGood) {
  const std::size_t count = 20000;
  const GaussianModel white(SymmetricMatrix::identity(64));
  const auto a = mc_typical_prob(TypicalSetSpec::entropy(white, good_delta_white_gaussian(64, 0.05)), count, 3);
  EXPECT_GE(a.estimate, 0.95 - 3 * a.std_error);
  const auto pair = geometric_vs_white(0.5, 64);
  const auto b = mc_typical_prob(TypicalSetSpec::relative_entropy(pair, good_delta_correlated(pair, 0.05).delta), count, 4);
  EXPECT_GE(b.estimate, 0.95 - 3 * b.std_error);
}

TEST(MonteCarlo, MonotoneInDelta) {
  const auto pair = geometric_vs_white(0.5, 16);
  double prev = 0, prev_se = 0;
  for (double d : {0.5, 1.0, 2.0, 4.0}) {
    const auto e = mc_typical_prob(TypicalSetSpec::relative_entropy(pair, d), 10000, 8);
    EXPECT_GE(e.estimate, prev - 2 * std::max(e.std_error, prev_se));
    prev = e.estimate;
    prev_se = e.std_error;
  }
}

TEST(MonteCarlo, MatchesDirectSampling) {
  const GaussianModel m(toeplitz_from_cov(CovarianceSequence::geometric(0.4), 5));
  const double delta = 1.2;
  const std::size_t count = 20000;
  const auto fast = mc_typical_prob(TypicalSetSpec::entropy(m, delta), count, 10);
  std::size_t hits = 0;
  for (const auto& x : sample(m, 11, count)) hits += entropy_typical_member(m, delta, x) ? 1 : 0;
  const double direct = double(hits) / count;
  EXPECT_NEAR(fast.estimate, direct, 4 * std::sqrt(2.0) * fast.std_error);
}

TEST(Bounds, Volume) {
  const auto a = volume_bounds(1.3, 0.0, 0.0);
  EXPECT_NEAR(a.upper, std::exp(1.3), 1e-12);
  EXPECT_NEAR(a.lower, std::exp(1.3), 1e-12);
  const auto b = volume_bounds(0.0, std::log(2.0), 0.5);
  EXPECT_NEAR(b.upper, 2.0, 1e-14);
  EXPECT_NEAR(b.lower, 0.25, 1e-14);
  EXPECT_GT(volume_bounds(0.0, 0.1, 0.1).lower, volume_bounds(0.0, 0.1, 0.2).lower);
  const auto big = volume_bounds(1000.0, 1.0, 0.1);
  EXPECT_TRUE(big.overflow);
  EXPECT_NEAR(big.log_upper, 1001.0, 1e-12);
  EXPECT_THROW(volume_bounds(0.0, 1.0, 1.0), Error);
}

TEST(Bounds, OtherSet) {
  EXPECT_NEAR(other_set_volume_lb(0.7, 0.0, 0.0, 0.0).value, std::exp(0.7), 1e-12);
  EXPECT_NEAR(other_set_volume_lb(0.0, std::log(2.0), 0.25, 0.25).value, 0.25, 1e-14);
  try {
    other_set_volume_lb(0.0, 1.0, 0.6, 0.4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::VacuousBound);
  }
}

TEST(Bounds, QProbability) {
  const auto a = q_prob_bounds(0.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(a.upper, 1.0);
  EXPECT_DOUBLE_EQ(a.lower, 1.0);
  const auto b = q_prob_bounds(5.0, 1.0, 0.1);
  EXPECT_NEAR(b.upper, std::exp(-4.0), 1e-15);
  EXPECT_NEAR(b.lower, 0.9 * std::exp(-6.0), 1e-15);
}

TEST(Bounds, QProbabilityContainsMonteCarlo) {
  const auto pair = diagonal_pair({3.0, 2.5, 2.0, 0.4, 0.3, 0.5, 1.8, 0.6});
  const double delta = good_delta_correlated(pair, 0.1).delta;
  const auto bounds = q_prob_bounds(pair.kl(), delta, 0.1);
  const auto est = mc_rel_typical_prob_under_q(pair, delta, 1000000, 12);
  EXPECT_LE(est.estimate, bounds.upper + 3 * est.std_error);
  EXPECT_GE(est.estimate, bounds.lower - 3 * est.std_error);
}

TEST(Clt, PairAtModerateSize) {
  const auto pair = geometric_vs_white(0.5, 128);
  const std::size_t count = 20000;
  const auto c = clt_psi_check(pair, count, 6, 0.03);
  EXPECT_TRUE(c.pass) << c.ks_distance;
  EXPECT_NEAR(c.mean, 0.0, 5 / std::sqrt(double(count)));
  EXPECT_NEAR(c.variance, 1.0, 0.05);
  EXPECT_THROW(clt_psi_check(pair, 100, 6), Error);
  EXPECT_THROW(clt_psi_check(diagonal_pair({1.0, 1.0}), 20000, 6), Error);
}

TEST(Clt, SingleKappaIsFarFromNormal) {
  const auto c = clt_psi_check(diagonal_pair({4.0}), 20000, 2);
  EXPECT_FALSE(c.pass);
  EXPECT_GT(c.ks_distance, 0.1);
}
