#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gcsl/covariance.hpp"
#include "gcsl/error.hpp"
#include "gcsl/units.hpp"
#include "json.hpp"

namespace gcsl::cli {

using nlohmann::json;

enum class Command { Rate, Typical, Detect, Asymptotics, Sublinear };

inline const char* command_name(Command c) {
  switch (c) {
    case Command::Rate: return "rate";
    case Command::Typical: return "typical";
    case Command::Detect: return "detect";
    case Command::Asymptotics: return "asymptotics";
    case Command::Sublinear: return "sublinear";
  }
  return "";
}

[[noreturn]] inline void config_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ConfigError, fmt::format("config field '{}': {}", field, what));
}

// Parsed covariance description. Canonical text forms:
//   white[:variance]   geometric:ratio[:scale]   table:k0,k1,...
struct CovSpec {
  enum class Kind { White, Geometric, Table } kind = Kind::White;
  double ratio = 0.0;
  double scale = 1.0;
  std::vector<double> lags;

  CovarianceSequence sequence() const {
    switch (kind) {
      case Kind::White: return CovarianceSequence::white(scale);
      case Kind::Geometric: return CovarianceSequence::geometric(ratio, scale);
      case Kind::Table: return CovarianceSequence::table(lags);
    }
    return CovarianceSequence::white();
  }

  std::string canonical() const {
    switch (kind) {
      case Kind::White: return fmt::format("white:{:.17g}", scale);
      case Kind::Geometric: return fmt::format("geometric:{:.17g}:{:.17g}", ratio, scale);
      case Kind::Table: {
        std::string s = "table:";
        for (std::size_t i = 0; i < lags.size(); ++i) s += fmt::format("{}{:.17g}", i ? "," : "", lags[i]);
        return s;
      }
    }
    return "";
  }

  bool operator==(const CovSpec& o) const { return canonical() == o.canonical(); }
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& field, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) config_error(field, fmt::format("'{}' is not a finite number", text));
    return v;
  } catch (const std::logic_error&) {
    config_error(field, fmt::format("'{}' is not a number", text));
  }
}

}  // namespace detail

inline CovSpec parse_cov_spec(const std::string& field, const std::string& text) {
  const auto parts = detail::split(text, ':');
  if (parts.empty()) config_error(field, "empty covariance spec");
  CovSpec spec;
  const std::string& kind = parts[0];
  if (kind == "white") {
    if (parts.size() > 2) config_error(field, "expected white[:variance]");
    spec.kind = CovSpec::Kind::White;
    if (parts.size() == 2) spec.scale = detail::parse_double(field, parts[1]);
    if (!(spec.scale > 0.0)) config_error(field, "variance must be positive");
  } else if (kind == "geometric") {
    if (parts.size() < 2 || parts.size() > 3) config_error(field, "expected geometric:ratio[:scale]");
    spec.kind = CovSpec::Kind::Geometric;
    spec.ratio = detail::parse_double(field, parts[1]);
    if (parts.size() == 3) spec.scale = detail::parse_double(field, parts[2]);
    if (!(std::abs(spec.ratio) < 1.0)) config_error(field, "geometric ratio must satisfy |ratio| < 1");
    if (!(spec.scale > 0.0)) config_error(field, "scale must be positive");
  } else if (kind == "table") {
    if (parts.size() != 2) config_error(field, "expected table:k0,k1,...");
    spec.kind = CovSpec::Kind::Table;
    for (const auto& v : detail::split(parts[1], ',')) spec.lags.push_back(detail::parse_double(field, v));
    if (spec.lags.empty() || !(spec.lags[0] > 0.0)) config_error(field, "table needs K[0] > 0");
  } else {
    config_error(field, fmt::format("unknown covariance kind '{}'", kind));
  }
  return spec;
}

inline CovSpec parse_cov_spec(const std::string& field, const json& j) {
  if (j.is_string()) return parse_cov_spec(field, j.get<std::string>());
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    config_error(field, "expected a string spec or an object with 'kind'");
  }
  const auto kind = j["kind"].get<std::string>();
  auto num = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) config_error(fmt::format("{}.{}", field, key), "expected a number");
    return j[key].get<double>();
  };
  std::string text;
  if (kind == "white") {
    text = fmt::format("white:{:.17g}", num("scale", 1.0));
  } else if (kind == "geometric") {
    if (!j.contains("ratio")) config_error(field + ".ratio", "missing");
    text = fmt::format("geometric:{:.17g}:{:.17g}", num("ratio", 0.0), num("scale", 1.0));
  } else if (kind == "table") {
    if (!j.contains("lags") || !j["lags"].is_array()) config_error(field + ".lags", "expected an array");
    text = "table:";
    bool first = true;
    for (const auto& v : j["lags"]) {
      if (!v.is_number()) config_error(field + ".lags", "expected numbers");
      text += fmt::format("{}{:.17g}", first ? "" : ",", v.get<double>());
      first = false;
    }
  } else {
    config_error(field + ".kind", fmt::format("unknown covariance kind '{}'", kind));
  }
  return parse_cov_spec(field, text);
}

struct ExperimentConfig {
  Command command = Command::Rate;
  CovSpec p;
  std::optional<CovSpec> q;
  std::vector<std::size_t> ns;
  double tau = 0.2;
  double eps = 0.05;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  std::size_t grid_points = 4097;
  InfoUnit unit = InfoUnit::Nats;
  double delta_scale = 1.0;
  double delta = 0.1;  // constant threshold for the sublinear crossover summary
  std::string out;
  bool check = false;
};

// Flag values that override the JSON file.
struct Overrides {
  std::optional<std::string> p, q, n_list, unit;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau, eps, delta_scale, delta;
  std::optional<std::size_t> samples, grid_points;
  std::optional<std::string> out;
  bool check = false;
};

inline std::vector<std::size_t> default_ns(Command c) {
  switch (c) {
    case Command::Rate: return {64, 128, 256, 512};
    case Command::Typical: return {64, 128, 256};
    case Command::Detect: return {32, 64, 96, 128, 160, 192, 224, 256};
    case Command::Asymptotics: return {64, 128, 256, 512};
    case Command::Sublinear: return {4, 10, 100, 10000, 1000000};
  }
  return {};
}

inline std::vector<std::size_t> parse_n_list(const std::string& text) {
  std::vector<std::size_t> ns;
  for (const auto& item : detail::split(text, ',')) {
    const double v = detail::parse_double("n_list", item);
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e12) config_error("n_list", fmt::format("'{}' is not a dimension", item));
    ns.push_back(static_cast<std::size_t>(v));
  }
  return ns;
}

inline InfoUnit parse_unit(const std::string& text) {
  if (text == "nats") return InfoUnit::Nats;
  if (text == "bits") return InfoUnit::Bits;
  config_error("unit", fmt::format("'{}' is not one of nats, bits", text));
}

namespace detail {

template <typename T>
T get_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(key, e.what());
  }
}

inline void validate(ExperimentConfig& c) {
  const std::size_t min_n = (c.command == Command::Asymptotics || c.command == Command::Sublinear) ? 3 : 1;
  if (c.ns.empty()) config_error("n_list", "must not be empty");
  for (std::size_t i = 0; i < c.ns.size(); ++i) {
    if (c.ns[i] < min_n) config_error("n_list", fmt::format("dimensions must be >= {}", min_n));
    if (i > 0 && c.ns[i] <= c.ns[i - 1]) config_error("n_list", "dimensions must be strictly ascending");
  }
  if (c.command != Command::Sublinear && c.ns.back() > 4096) config_error("n_list", "dense dimensions are capped at 4096");
  if (!(c.tau > 0.0 && c.tau < 0.5)) config_error("tau", "must lie in (0, 1/2)");
  if (!(c.eps > 0.0 && c.eps <= 1.0)) config_error("eps", "must lie in (0, 1]");
  if (c.samples < 1000) config_error("samples", "must be >= 1000");
  if (c.command == Command::Detect && c.samples < 10000) config_error("samples", "detect needs >= 10000");
  if (c.grid_points < 3 || c.grid_points % 2 == 0) config_error("grid_points", "must be odd and >= 3");
  if (!(c.delta_scale > 0.0) || !std::isfinite(c.delta_scale)) config_error("delta_scale", "must be positive");
  if (!(c.delta > 0.0) || !std::isfinite(c.delta)) config_error("delta", "must be positive");
  const bool needs_pair = c.command == Command::Rate || c.command == Command::Detect;
  if (needs_pair && !c.q) c.q = CovSpec{};
  if (c.q && c.command != Command::Typical && c.command != Command::Rate && c.command != Command::Detect) {
    c.q.reset();
  }
  if (c.q && *c.q == c.p) config_error("q", "p and q are identical; the pair is degenerate");
}

}  // namespace detail

// Reads JSON text (may be empty), applies flag overrides and validates.
inline ExperimentConfig make_config(Command command, const std::string& json_text, const Overrides& o) {
  json j = json::object();
  if (!json_text.empty()) {
    try {
      j = json::parse(json_text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ConfigError, fmt::format("config is not valid JSON: {}", e.what()));
    }
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  }
  static const std::vector<std::string> known{"subcommand", "p", "q", "n_list", "tau", "eps", "samples", "seed",
                                              "grid_points", "unit", "delta_scale", "delta", "out"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) config_error(key, "unknown field");
  }
  if (j.contains("subcommand") && detail::get_field<std::string>(j, "subcommand") != command_name(command)) {
    config_error("subcommand", fmt::format("config is for '{}', not '{}'", j["subcommand"].get<std::string>(),
                                           command_name(command)));
  }

  ExperimentConfig c;
  c.command = command;
  c.p = CovSpec{CovSpec::Kind::Geometric, 0.5, 1.0, {}};
  if (j.contains("p")) c.p = parse_cov_spec("p", j["p"]);
  if (j.contains("q")) c.q = parse_cov_spec("q", j["q"]);
  c.ns = default_ns(command);
  if (j.contains("n_list")) {
    const auto& arr = j["n_list"];
    if (!arr.is_array()) config_error("n_list", "expected an array of integers");
    c.ns.clear();
    for (const auto& v : arr) {
      if (!v.is_number_integer() || v.get<long long>() < 1) config_error("n_list", "expected positive integers");
      c.ns.push_back(v.get<std::size_t>());
    }
  }
  if (j.contains("tau")) c.tau = detail::get_field<double>(j, "tau");
  if (j.contains("eps")) c.eps = detail::get_field<double>(j, "eps");
  if (j.contains("samples")) c.samples = detail::get_field<std::size_t>(j, "samples");
  if (j.contains("seed")) c.seed = detail::get_field<std::uint64_t>(j, "seed");
  if (j.contains("grid_points")) c.grid_points = detail::get_field<std::size_t>(j, "grid_points");
  if (j.contains("unit")) c.unit = parse_unit(detail::get_field<std::string>(j, "unit"));
  if (j.contains("delta_scale")) c.delta_scale = detail::get_field<double>(j, "delta_scale");
  if (j.contains("delta")) c.delta = detail::get_field<double>(j, "delta");
  if (j.contains("out")) c.out = detail::get_field<std::string>(j, "out");

  if (o.p) c.p = parse_cov_spec("p", *o.p);
  if (o.q) c.q = parse_cov_spec("q", *o.q);
  if (o.n_list) c.ns = parse_n_list(*o.n_list);
  if (o.tau) c.tau = *o.tau;
  if (o.eps) c.eps = *o.eps;
  // detect ties eps to tau unless eps is given
  if (command == Command::Detect && !o.eps && !j.contains("eps")) c.eps = c.tau;
  if (o.samples) c.samples = *o.samples;
  if (o.seed) c.seed = *o.seed;
  if (o.grid_points) c.grid_points = *o.grid_points;
  if (o.unit) c.unit = parse_unit(*o.unit);
  if (o.delta_scale) c.delta_scale = *o.delta_scale;
  if (o.delta) c.delta = *o.delta;
  if (o.out) c.out = *o.out;
  c.check = o.check;
  detail::validate(c);
  return c;
}

// Everything that determines the CSV body, in canonical key order.
inline json canonical_json(const ExperimentConfig& c) {
  json j;
  j["subcommand"] = command_name(c.command);
  j["p"] = c.p.canonical();
  j["q"] = c.q ? json(c.q->canonical()) : json(nullptr);
  j["n_list"] = c.ns;
  j["tau"] = c.tau;
  j["eps"] = c.eps;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["grid_points"] = c.grid_points;
  j["unit"] = c.unit == InfoUnit::Nats ? "nats" : "bits";
  j["delta_scale"] = c.delta_scale;
  j["delta"] = c.delta;
  return j;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  return fmt::format("{:016x}", fnv1a64(canonical_json(c).dump()));
}

}  // namespace gcsl::cli
