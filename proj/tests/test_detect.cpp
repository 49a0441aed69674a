#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gcsl/detect.hpp"
#include "oracles.hpp"

using namespace gcsl;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

HypothesisPair geometric_vs_white(double r, std::size_t n) {
  return whiten(toeplitz_from_cov(CovarianceSequence::geometric(r), n), SymmetricMatrix::identity(n));
}

}  // namespace

TEST(DetectorSpecTest, Validation) {
  EXPECT_THROW(DetectorSpec::typical_set(0.0), Error);
  EXPECT_THROW(DetectorSpec::np_threshold(NAN), Error);
  const auto np = DetectorSpec::np_threshold(1.0);
  EXPECT_TRUE(np.decides_p(1.5, 0.0));
  EXPECT_FALSE(np.decides_p(1.0, 0.0));
  const auto ts = DetectorSpec::typical_set(0.5);
  EXPECT_TRUE(ts.decides_p(2.4, 2.0));
  EXPECT_FALSE(ts.decides_p(2.6, 2.0));
  EXPECT_THROW(threshold_of(ts), Error);
}

TEST(Calibrate, AlphaBelowTauOnFreshSeed) {
  const auto pair = geometric_vs_white(0.5, 16);
  for (double tau : {0.05, 0.2, 0.4}) {
    const auto det = np_calibrate(pair, tau, 20000, 1);
    const auto a = estimate_alpha(det, pair, 20000, 2);
    EXPECT_LT(a.estimate, tau + 3 * a.std_error) << tau;
    EXPECT_GT(a.estimate, tau - 5 * a.std_error) << tau;
  }
}

TEST(Calibrate, ThresholdIncreasesWithTau) {
  const auto pair = geometric_vs_white(0.5, 16);
  double prev = -kInf;
  for (double tau : {0.01, 0.1, 0.3, 0.49}) {
    const double t = threshold_of(np_calibrate(pair, tau, 20000, 3));
    EXPECT_GT(t, prev);
    prev = t;
  }
}

TEST(Calibrate, NearHalfIsMedian) {
  const auto pair = whiten(scaled(SymmetricMatrix::identity(8), 2.0), SymmetricMatrix::identity(8));
  const std::size_t count = 40000;
  auto llrs = llr_samples(pair, Hypothesis::P, 5, count);
  std::sort(llrs.begin(), llrs.end());
  const double median = llrs[count / 2];
  EXPECT_NEAR(threshold_of(np_calibrate(pair, 0.4999, count, 5)), median, 0.05);
}

TEST(Calibrate, Validation) {
  const auto pair = geometric_vs_white(0.5, 4);
  EXPECT_THROW(np_calibrate(pair, 0.5, 20000, 1), Error);
  EXPECT_THROW(np_calibrate(pair, 0.0, 20000, 1), Error);
  EXPECT_THROW(np_calibrate(pair, 0.2, 9999, 1), Error);
  EXPECT_THROW(np_calibrate(geometric_vs_white(0.0, 4), 0.2, 20000, 1), Error);
  EXPECT_EQ(threshold_of(np_calibrate(pair, 1e-5, 10000, 1)), -kInf);
}

TEST(Alpha, Examples) {
  const auto pair = geometric_vs_white(0.5, 8);
  EXPECT_EQ(estimate_alpha(DetectorSpec::np_threshold(-kInf), pair, 1000, 1).estimate, 0.0);
  const double tau = 0.1;
  const auto gamma = good_delta_correlated(geometric_vs_white(0.5, 64), tau).delta;
  const auto big = geometric_vs_white(0.5, 64);
  const auto a = estimate_alpha(DetectorSpec::typical_set(gamma), big, 20000, 4);
  EXPECT_LE(a.estimate, tau + 3 * a.std_error);
  double prev = 0.0;
  for (double t : {-2.0, 0.0, 1.0, 3.0}) {
    const double v = estimate_alpha(DetectorSpec::np_threshold(t), pair, 20000, 7).estimate;
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(BetaIs, WholeAndEmptyRegions) {
  const auto pair = geometric_vs_white(0.5, 8);
  const auto whole = estimate_beta_is(DetectorSpec::np_threshold(-kInf), pair, 100000, 3);
  EXPECT_NEAR(whole.beta_hat, 1.0, 3 * whole.beta_hat * whole.stderr_beta_log);
  EXPECT_EQ(whole.alpha_hat, 0.0);
  const auto empty = estimate_beta_is(DetectorSpec::np_threshold(kInf), pair, 1000, 3);
  EXPECT_EQ(empty.beta_hat, 0.0);
  EXPECT_TRUE(empty.beta_underflow);
  EXPECT_EQ(empty.alpha_hat, 1.0);
}

TEST(BetaIs, OneDimensionMatchesDirectSampling) {
  const auto p = SymmetricMatrix::diagonal(Vector{2.0});
  const auto q = SymmetricMatrix::identity(1);
  const auto pair = whiten(p, q);
  const std::size_t count = 1000000;
  const auto is = estimate_beta_is(DetectorSpec::np_threshold(0.0), pair, count, 11);
  const auto direct = oracle::direct_q_beta(oracle::to_eigen(p), oracle::to_eigen(q), 0.0, count, 12);
  const double se_is = is.beta_hat * is.stderr_beta_log;
  EXPECT_NEAR(is.beta_hat, direct.estimate, 3 * std::hypot(se_is, direct.std_error));
  // llr > 0 iff x^2 > 2 ln 2
  EXPECT_NEAR(is.beta_hat, 2 * qfunc(std::sqrt(2 * std::log(2.0))), 3 * se_is);
}

TEST(BetaIs, DeepTailStaysFinite) {
  const auto pair = geometric_vs_white(0.5, 256);
  const auto det = DetectorSpec::np_threshold(pair.kl() - 5.0);
  const auto e = estimate_beta_is(det, pair, 4000, 2);
  EXPECT_FALSE(e.beta_underflow);
  EXPECT_TRUE(std::isfinite(e.beta_log));
  EXPECT_GT(e.beta_log, 20.0);
  EXPECT_GT(e.stderr_beta_log, 0.0);
}

TEST(BetaIs, DeterministicPerSeed) {
  const auto pair = geometric_vs_white(0.5, 16);
  const auto det = DetectorSpec::np_threshold(1.0);
  const auto a = estimate_beta_is(det, pair, 10000, 99);
  const auto b = estimate_beta_is(det, pair, 10000, 99);
  EXPECT_EQ(a.beta_log, b.beta_log);
  EXPECT_EQ(a.alpha_hat, b.alpha_hat);
  EXPECT_NE(a.beta_log, estimate_beta_is(det, pair, 10000, 100).beta_log);
}

TEST(BetaIs, NeymanPearsonDominatesTypicalSet) {
  const double tau = 0.2;
  const auto pair = geometric_vs_white(0.5, 48);
  const auto np = estimate_beta_is(np_calibrate(pair, tau, 50000, 1), pair, 50000, 2);
  const double gamma = good_delta_correlated(pair, tau).delta;
  const auto ts = estimate_beta_is(DetectorSpec::typical_set(gamma), pair, 50000, 3);
  EXPECT_LE(ts.alpha_hat, tau + 3 * ts.stderr_alpha);
  EXPECT_GE(np.beta_log, ts.beta_log - 3 * std::hypot(np.stderr_beta_log, ts.stderr_beta_log));
}

TEST(SteinBounds, Examples) {
  const auto b = stein_bounds(10.0, 1.0, 1.0, 0.1, 0.2);
  EXPECT_DOUBLE_EQ(b.exp_lower, 9.0);
  EXPECT_NEAR(b.exp_upper, 11.0 - std::log(0.7), 1e-14);
  EXPECT_NEAR(b.exp_upper, 11.356675, 1e-6);
  EXPECT_NEAR(b.beta_upper, std::exp(-9.0), 1e-16);
  EXPECT_NEAR(b.beta_lower, 0.7 * std::exp(-11.0), 1e-16);
  const auto c = stein_bounds(4.0, 0.0, 0.0, 0.0, 0.0);
  EXPECT_EQ(c.exp_lower, 4.0);
  EXPECT_EQ(c.exp_upper, 4.0);
  try {
    stein_bounds(1.0, 1.0, 1.0, 0.5, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::VacuousBound);
  }
}

TEST(Fit, Examples) {
  const std::vector<double> ns{32, 64, 96, 128};
  std::vector<double> exact, flat(4, 3.0);
  for (double n : ns) exact.push_back(0.5 * n);
  const auto f = exponent_fit(ns, exact);
  EXPECT_NEAR(f.slope, 0.5, 1e-14);
  EXPECT_NEAR(f.intercept, 0.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-14);
  const auto g = exponent_fit(ns, flat);
  EXPECT_NEAR(g.slope, 0.0, 1e-15);
  EXPECT_EQ(g.r2, 1.0);
  EXPECT_THROW(exponent_fit(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(exponent_fit(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), Error);
}

TEST(Fit, SublinearTermWashesOut) {
  auto slope_err = [](double max_n) {
    std::vector<double> ns, ys;
    for (double n = max_n / 8; n <= max_n; n += max_n / 8) {
      ns.push_back(n);
      ys.push_back(0.5 * n + 3 * std::sqrt(n));
    }
    return std::abs(exponent_fit(ns, ys).slope - 0.5);
  };
  EXPECT_LT(slope_err(1e4), slope_err(1e3));
  EXPECT_LT(slope_err(1e6), 0.01);
}

TEST(Experiment, RejectsDegenerateAndBadInput) {
  const std::vector<std::size_t> ns{8, 16, 24};
  const auto k = CovarianceSequence::geometric(0.5);
  EXPECT_THROW(gcsl_experiment(k, k, ns), Error);
  GcslOptions opt;
  opt.tau = 0.5;
  EXPECT_THROW(gcsl_experiment(k, CovarianceSequence::white(), ns, opt), Error);
  const std::vector<std::size_t> unsorted{16, 8, 24};
  EXPECT_THROW(gcsl_experiment(k, CovarianceSequence::white(), unsorted), Error);
}

TEST(Experiment, SmallRunIsConsistent) {
  const std::vector<std::size_t> ns{16, 32, 48};
  GcslOptions opt;
  opt.samples = 20000;
  opt.seed = 5;
  const auto r = gcsl_experiment(CovarianceSequence::geometric(0.5), CovarianceSequence::white(), ns, opt);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_NEAR(r.stein_rate, -0.5 * std::log(0.75), 1e-9);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.in_window) << row.n;
    EXPECT_LT(row.np.alpha_hat, opt.tau + 3 * row.np.stderr_alpha);
    EXPECT_NEAR(row.gamma, row.delta, 1e-15);
  }
  const auto again = gcsl_experiment(CovarianceSequence::geometric(0.5), CovarianceSequence::white(), ns, opt);
  EXPECT_EQ(again.fit.slope, r.fit.slope);
}

TEST(Experiment, CrossCheckAgainstDirectSampling) {
  const std::size_t n = 32;
  const auto p = toeplitz_from_cov(CovarianceSequence::geometric(0.5), n);
  const auto q = SymmetricMatrix::identity(n);
  const auto pair = whiten(p, q);
  const auto det = np_calibrate(pair, 0.2, 50000, 1);
  const auto is = estimate_beta_is(det, pair, 50000, 2);
  const auto direct = oracle::direct_q_beta(oracle::to_eigen(p), oracle::to_eigen(q), threshold_of(det), 200000, 3);
  EXPECT_NEAR(is.beta_hat, direct.estimate, 3 * std::hypot(is.beta_hat * is.stderr_beta_log, direct.std_error));
}
