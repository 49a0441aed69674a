#pragma once

#include <fmt/format.h>

#include <cmath>
#include <string>
#include <vector>

#include "cli/config.hpp"
#include "gcsl/gcsl.hpp"

namespace gcsl::cli {

// A CSV document: '#' metadata lines, one header row, data rows, then
// '# summary' lines.
struct CsvDoc {
  std::vector<std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, std::string>> summary;
  bool check_passed = true;

  std::string render() const {
    std::string s;
    for (const auto& m : meta) s += "# " + m + "\n";
    s += join(header) + "\n";
    for (const auto& r : rows) s += join(r) + "\n";
    for (const auto& [k, v] : summary) s += "# summary " + k + "=" + v + "\n";
    return s;
  }

 private:
  static std::string join(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
    return s;
  }
};

inline std::string num(double v) { return fmt::format("{:.12g}", v); }
inline std::string num(std::size_t v) { return fmt::format("{}", v); }
inline std::string flag(bool b) { return b ? "true" : "false"; }

namespace detail {

inline CsvDoc start_doc(const ExperimentConfig& c) {
  CsvDoc d;
  d.meta.push_back(fmt::format("config_hash={} seed={}", config_hash(c), c.seed));
  d.meta.push_back(fmt::format("subcommand={} unit={}", command_name(c.command), c.unit == InfoUnit::Nats ? "nats" : "bits"));
  if (c.command != Command::Sublinear) d.meta.push_back(fmt::format("p={}", c.p.canonical()));
  if (c.q) d.meta.push_back(fmt::format("q={}", c.q->canonical()));
  return d;
}

inline double u(double nats, const ExperimentConfig& c) { return in_unit(nats, c.unit); }

inline HypothesisPair toeplitz_pair(const ExperimentConfig& c, std::size_t n) {
  return whiten(toeplitz_from_cov(c.p.sequence(), n), toeplitz_from_cov(c.q->sequence(), n));
}

}  // namespace detail

// D^[n], D^[n]/n and the spectral rate per dimension.
inline CsvDoc cmd_rate(const ExperimentConfig& c) {
  auto d = detail::start_doc(c);
  d.header = {"n", "D", "D_over_n", "C_s", "abs_err"};
  const auto sp = Spectrum::from_covariance(c.p.sequence(), c.grid_points);
  const auto sq = Spectrum::from_covariance(c.q->sequence(), c.grid_points);
  const double cs = stein_rate(sp, sq);
  std::vector<double> errs;
  for (std::size_t n : c.ns) {
    const auto pair = detail::toeplitz_pair(c, n);
    pair.require_nondegenerate();
    const double kl = pair.kl();
    const double per = kl / static_cast<double>(n);
    errs.push_back(std::abs(per - cs));
    d.rows.push_back({num(n), num(detail::u(kl, c)), num(detail::u(per, c)), num(detail::u(cs, c)),
                      num(detail::u(errs.back(), c))});
  }
  const bool decreasing = errs.size() < 2 || errs.back() < errs.front();
  d.summary.push_back({"C_s", num(detail::u(cs, c))});
  d.summary.push_back({"abs_err_decreasing", flag(decreasing)});
  d.check_passed = decreasing;
  return d;
}

// Monte Carlo probability of the typical set at delta = delta_scale * delta_min.
// With only p given the set is the entropy typical set of p and B_n reports
// sqrt(n), the scale for which delta_min = B_n / sqrt(2) Q^{-1}(eps/2).
inline CsvDoc cmd_typical(const ExperimentConfig& c) {
  auto d = detail::start_doc(c);
  d.meta.push_back(fmt::format("eps={} delta_scale={} samples={}", num(c.eps), num(c.delta_scale), num(c.samples)));
  d.header = {"n", "B_n", "delta_min", "p_hat", "stderr", "pass"};
  bool all = true;
  for (std::size_t i = 0; i < c.ns.size(); ++i) {
    const std::size_t n = c.ns[i];
    const std::uint64_t seed = derive_seed(c.seed, n);
    double bn = 0.0;
    double delta_min = 0.0;
    ProbabilityEstimate est;
    bool pass = true;
    if (c.q) {
      const auto pair = detail::toeplitz_pair(c, n);
      const auto t = good_delta_correlated(pair, c.eps);
      bn = t.bn;
      delta_min = t.delta;
      if (delta_min > 0.0) est = mc_typical_prob(TypicalSetSpec::relative_entropy(pair, c.delta_scale * delta_min), c.samples, seed);
    } else {
      const GaussianModel model(toeplitz_from_cov(c.p.sequence(), n));
      bn = std::sqrt(static_cast<double>(n));
      delta_min = good_delta_white_gaussian(n, c.eps);
      if (delta_min > 0.0) est = mc_typical_prob(TypicalSetSpec::entropy(model, c.delta_scale * delta_min), c.samples, seed);
    }
    if (delta_min > 0.0) pass = est.estimate >= 1.0 - c.eps - 3.0 * est.std_error;
    all = all && pass;
    d.rows.push_back({num(n), num(bn), num(detail::u(delta_min, c)), num(est.estimate), num(est.std_error), flag(pass)});
  }
  d.summary.push_back({"all_pass", flag(all)});
  d.check_passed = all;
  return d;
}

inline CsvDoc cmd_detect(const ExperimentConfig& c) {
  auto d = detail::start_doc(c);
  d.meta.push_back(fmt::format("tau={} eps={} samples={}", num(c.tau), num(c.eps), num(c.samples)));
  d.header = {"n", "D", "lower", "upper", "np_beta_log", "ts_beta_log", "in_window"};
  GcslOptions opt;
  opt.tau = c.tau;
  opt.eps = c.eps;
  opt.samples = c.samples;
  opt.seed = c.seed;
  opt.grid_points = c.grid_points;
  const auto r = gcsl_experiment(c.p.sequence(), c.q->sequence(), c.ns, opt);
  bool all = true;
  for (const auto& row : r.rows) {
    all = all && row.in_window;
    d.rows.push_back({num(row.n), num(detail::u(row.kl, c)), num(detail::u(row.window.exp_lower, c)),
                      num(detail::u(row.window.exp_upper, c)), num(detail::u(row.np.beta_log, c)),
                      num(detail::u(row.ts.beta_log, c)), flag(row.in_window)});
  }
  d.summary.push_back({"slope", num(detail::u(r.fit.slope, c))});
  d.summary.push_back({"C_s", num(detail::u(r.stein_rate, c))});
  d.summary.push_back({"rel_err", num(r.rel_err)});
  d.check_passed = all && r.rel_err < 0.15;
  return d;
}

// Toeplitz eigenvalue averages against spectral integrals for F = x, ln x, 1/x.
inline CsvDoc cmd_asymptotics(const ExperimentConfig& c) {
  auto d = detail::start_doc(c);
  d.header = {"n", "weak_diff_toeplitz_circulant", "eigavg_x", "eigavg_log", "eigavg_inv",
              "spectral_x", "spectral_log", "spectral_inv"};
  const auto k = c.p.sequence();
  const auto s = Spectrum::from_covariance(k, c.grid_points);
  auto fx = [](double x) { return x; };
  auto flog = [](double x) { return std::log(x); };
  auto finv = [](double x) { return 1.0 / x; };
  const double sx = spectral_integral(fx, s);
  const double slog = spectral_integral(flog, s);
  const double sinv = spectral_integral(finv, s);
  std::vector<double> weak, log_gap;
  for (std::size_t n : c.ns) {
    const auto t = toeplitz_from_cov(k, n);
    const auto eigs = eigvals_sym(t);
    weak.push_back(weak_norm(t.dense() - circulant_from_cov(k, n).dense()));
    const double ex = eig_functional_avg(fx, eigs);
    const double elog = eig_functional_avg(flog, eigs);
    const double einv = eig_functional_avg(finv, eigs);
    log_gap.push_back(std::abs(elog - slog));
    d.rows.push_back({num(n), num(weak.back()), num(ex), num(elog), num(einv), num(sx), num(slog), num(sinv)});
  }
  const bool shrinking = weak.size() < 2 || (weak.back() <= weak.front() && log_gap.back() <= log_gap.front());
  d.summary.push_back({"converging", flag(shrinking)});
  d.check_passed = shrinking;
  return d;
}

inline CsvDoc cmd_sublinear(const ExperimentConfig& c) {
  auto d = detail::start_doc(c);
  d.header = {"n", "D", "ln_sqrt_n", "ratio", "p_B", "alpha_exact", "beta_exact", "beta_log"};
  bool ok = true;
  double first_gap = 0.0, last_gap = 0.0;
  for (std::size_t i = 0; i < c.ns.size(); ++i) {
    const std::size_t n = c.ns[i];
    const double kl = sub_kl(n);
    const double half_log = 0.5 * std::log(static_cast<double>(n));
    const double ratio = kl / half_log;
    const auto e = exact_error_pair(n);
    const double pb = sub_typical_lb(n);
    ok = ok && pb == 1.0 - 1.0 / static_cast<double>(n) && e.beta_log == half_log;
    (i == 0 ? first_gap : last_gap) = std::abs(ratio - 1.0);
    d.rows.push_back({num(n), num(detail::u(kl, c)), num(detail::u(half_log, c)), num(ratio), num(pb), num(e.alpha),
                      num(e.beta), num(detail::u(e.beta_log, c))});
  }
  if (c.ns.size() > 1) ok = ok && last_gap < first_gap;
  d.summary.push_back({"crossover_delta", num(detail::u(c.delta, c))});
  d.summary.push_back({"crossover_n", num(crossover_n(c.delta))});
  d.check_passed = ok;
  return d;
}

inline CsvDoc run_command(const ExperimentConfig& c) {
  switch (c.command) {
    case Command::Rate: return cmd_rate(c);
    case Command::Typical: return cmd_typical(c);
    case Command::Detect: return cmd_detect(c);
    case Command::Asymptotics: return cmd_asymptotics(c);
    case Command::Sublinear: return cmd_sublinear(c);
  }
  throw Error(ErrorCode::ConfigError, "unknown subcommand");
}

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitCheck = 4 };

inline int exit_code_for(ErrorCode code) {
  return code == ErrorCode::ConfigError ? kExitConfig : kExitNumerical;
}

}  // namespace gcsl::cli
