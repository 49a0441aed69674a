#include <fmt/format.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cli/commands.hpp"

namespace cli = gcsl::cli;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gcsl::Error(gcsl::ErrorCode::ConfigError, fmt::format("cannot read config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Options {
  std::string config_path;
  cli::Overrides o;
};

void add_common(CLI::App* sub, Options& opt) {
  sub->add_option("--config", opt.config_path, "JSON config file");
  sub->add_option("--seed", opt.o.seed, "base seed");
  sub->add_option("--n-list", opt.o.n_list, "comma separated dimensions, ascending");
  sub->add_option("--tau", opt.o.tau, "type-I error budget, 0 < tau < 1/2");
  sub->add_option("--eps", opt.o.eps, "typical-set miss probability");
  sub->add_option("--samples", opt.o.samples, "Monte Carlo sample count");
  sub->add_option("--unit", opt.o.unit, "nats or bits");
  sub->add_option("--out", opt.o.out, "CSV output path (stdout when absent)");
  sub->add_option("--p", opt.o.p, "covariance of p: white[:v] | geometric:r[:s] | table:k0,k1,...");
  sub->add_option("--q", opt.o.q, "covariance of q, same forms as --p");
  sub->add_option("--grid", opt.o.grid_points, "odd spectral quadrature grid size");
  sub->add_option("--delta-scale", opt.o.delta_scale, "typical: multiple of the minimal threshold");
  sub->add_option("--delta", opt.o.delta, "sublinear: constant threshold for the crossover summary");
  sub->add_flag("--check", opt.o.check, "exit 4 when the built-in check fails");
}

int run(cli::Command command, const Options& opt) {
  const auto text = opt.config_path.empty() ? std::string() : read_file(opt.config_path);
  const auto config = cli::make_config(command, text, opt.o);
  const auto doc = cli::run_command(config);
  const auto csv = doc.render();
  if (config.out.empty()) {
    std::fwrite(csv.data(), 1, csv.size(), stdout);
  } else {
    std::ofstream out(config.out, std::ios::binary);
    if (!out) throw gcsl::Error(gcsl::ErrorCode::ConfigError, fmt::format("cannot write '{}'", config.out));
    out << csv;
  }
  if (config.check && !doc.check_passed) {
    fmt::print(stderr, "check failed for {}\n", cli::command_name(command));
    return cli::kExitCheck;
  }
  return cli::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stein exponent experiments for stationary Gaussian hypotheses"};
  app.require_subcommand(1);
  Options opt;
  const std::pair<const char*, cli::Command> subs[] = {
      {"rate", cli::Command::Rate},
      {"typical", cli::Command::Typical},
      {"detect", cli::Command::Detect},
      {"asymptotics", cli::Command::Asymptotics},
      {"sublinear", cli::Command::Sublinear},
  };
  const char* help[] = {
      "relative entropy per sample against the spectral rate",
      "Monte Carlo probability of the typical set at the minimal threshold",
      "Neyman-Pearson and typical-set type-II exponents with bound windows",
      "Toeplitz eigenvalue averages against spectral integrals",
      "closed-form sublinear example",
  };
  for (std::size_t i = 0; i < 5; ++i) add_common(app.add_subcommand(subs[i].first, help[i]), opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  try {
    for (const auto& [name, command] : subs) {
      if (app.got_subcommand(name)) return run(command, opt);
    }
  } catch (const gcsl::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return cli::exit_code_for(e.code());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return cli::kExitNumerical;
  }
  return cli::kExitConfig;
}
