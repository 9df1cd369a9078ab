#pragma once

/// Experiment configuration: a flat `key = value` text format with dotted
/// keys, chosen for diff-friendliness. Lists are comma separated and sweep
/// axes accept `start:end:step` ranges. The echo writer emits a canonical
/// form whose parse reproduces the configuration exactly.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "singlab/exponents.hpp"
#include "singlab/scalar_functions.hpp"

namespace singlab {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                    : what),
        line_number(line) {}
  int line_number = 0;
};

enum class Scenario {
  ExactRadial,
  Manufactured,
  ExponentAtlas,
  TailFit,
  EntropyCheck,
  HZero,
  Bounded,
  TransformCrosscheck,
  UniquenessProbe,
  ThresholdProbe,
  StrongSingular,
};

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::ExactRadial: return "exact-radial";
    case Scenario::Manufactured: return "manufactured";
    case Scenario::ExponentAtlas: return "exponent-atlas";
    case Scenario::TailFit: return "tail-fit";
    case Scenario::EntropyCheck: return "entropy-check";
    case Scenario::HZero: return "h-zero";
    case Scenario::Bounded: return "bounded";
    case Scenario::TransformCrosscheck: return "transform-crosscheck";
    case Scenario::UniquenessProbe: return "uniqueness-probe";
    case Scenario::ThresholdProbe: return "threshold-probe";
    case Scenario::StrongSingular: return "strong-singular";
  }
  return "?";
}

inline Scenario parse_scenario(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(Scenario::StrongSingular); ++i) {
    const auto s = static_cast<Scenario>(i);
    if (name == scenario_name(s)) return s;
  }
  throw ConfigError("unknown scenario '" + name + "'");
}

struct SweepAxis {
  std::string key;
  std::vector<double> values;
  friend bool operator==(const SweepAxis&, const SweepAxis&) = default;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::Manufactured;

  double dim_n = 3.0;
  double p = 2.0;
  double theta = 0.0;
  double m = 1.0;
  HModel h;
  double source_amplitude = 1.0;
  double source_sigma = 0.0;
  double epsilon = 0.5;  // exact-radial family parameter

  std::size_t cells = 512;
  double grading = 1.0;
  double r_in = 0.0;

  std::int64_t n_first = 16;
  std::int64_t n_last = std::int64_t{1} << 24;
  double ratio = 2.0;

  double solver_tol = 1e-12;
  double continuation_tol = 1e-10;
  int max_iterations = 80;

  std::uint64_t seed = 12345;

  std::vector<SweepAxis> sweep;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline double parse_number(const std::string& v, int line) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + v + "'", line);
  }
  if (pos != v.size())
    throw ConfigError("trailing characters after number in '" + v + "'", line);
  return out;
}

inline std::vector<double> parse_values(const std::string& v, int line) {
  // Either `a:b:step` or a comma list.
  if (v.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(parse_number(trim(tok), line));
    if (parts.size() != 3)
      throw ConfigError("range must be start:end:step", line);
    const double a = parts[0], b = parts[1], step = parts[2];
    if (!(step > 0.0) || b < a) throw ConfigError("bad range bounds", line);
    std::vector<double> out;
    for (double x = a; x <= b + 0.5 * step; x += step)
      out.push_back(std::min(x, b));
    return out;
  }
  std::vector<double> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_number(trim(tok), line));
  if (out.empty()) throw ConfigError("empty value list", line);
  return out;
}

}  // namespace detail

/// Assign one numeric configuration key; used both by the parser and by the
/// sweep driver when materializing grid points.
inline void set_numeric(ExperimentConfig& cfg, const std::string& key, double value,
                        int line = 0) {
  if (key == "problem.dim_n") cfg.dim_n = value;
  else if (key == "problem.p") cfg.p = value;
  else if (key == "problem.theta") cfg.theta = value;
  else if (key == "problem.m") cfg.m = value;
  else if (key == "problem.h.gamma1") cfg.h.gamma1 = value;
  else if (key == "problem.h.gamma2") cfg.h.gamma2 = value;
  else if (key == "problem.h.scale") cfg.h.scale = value;
  else if (key == "problem.h.zero_point") cfg.h.zero_point = value;
  else if (key == "problem.source.amplitude") cfg.source_amplitude = value;
  else if (key == "problem.source.sigma") cfg.source_sigma = value;
  else if (key == "problem.epsilon") cfg.epsilon = value;
  else if (key == "mesh.cells") cfg.cells = static_cast<std::size_t>(value);
  else if (key == "mesh.grading") cfg.grading = value;
  else if (key == "mesh.r_in") cfg.r_in = value;
  else if (key == "continuation.n_first") cfg.n_first = static_cast<std::int64_t>(value);
  else if (key == "continuation.n_last") cfg.n_last = static_cast<std::int64_t>(value);
  else if (key == "continuation.ratio") cfg.ratio = value;
  else if (key == "solver.tol") cfg.solver_tol = value;
  else if (key == "solver.max_iterations") cfg.max_iterations = static_cast<int>(value);
  else if (key == "continuation.tol") cfg.continuation_tol = value;
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(value);
  else throw ConfigError("unknown key '" + key + "'", line);
}

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  bool scenario_seen = false;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value'", line);
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("empty key or value", line);
    if (key == "scenario") {
      try {
        cfg.scenario = parse_scenario(value);
      } catch (const ConfigError& e) {
        throw ConfigError(e.what(), line);
      }
      scenario_seen = true;
    } else if (key == "problem.h.zero_point" && value == "none") {
      cfg.h.zero_point.reset();
    } else if (key.rfind("sweep.", 0) == 0) {
      SweepAxis axis;
      axis.key = key.substr(6);
      // Axis must name a real numeric key; probe on a scratch config.
      ExperimentConfig scratch;
      set_numeric(scratch, axis.key, 0.0, line);
      axis.values = detail::parse_values(value, line);
      cfg.sweep.push_back(std::move(axis));
    } else {
      set_numeric(cfg, key, detail::parse_number(value, line), line);
    }
  }
  if (!scenario_seen) throw ConfigError("missing required key 'scenario'");
  return cfg;
}

/// Canonical echo; parsing it reproduces the configuration exactly.
inline std::string echo_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  auto put = [&os](const char* key, const std::string& v) {
    os << key << " = " << v << "\n";
  };
  put("scenario", scenario_name(cfg.scenario));
  put("problem.dim_n", format_double(cfg.dim_n));
  put("problem.p", format_double(cfg.p));
  put("problem.theta", format_double(cfg.theta));
  put("problem.m", format_double(cfg.m));
  put("problem.h.gamma1", format_double(cfg.h.gamma1));
  put("problem.h.gamma2", format_double(cfg.h.gamma2));
  put("problem.h.scale", format_double(cfg.h.scale));
  put("problem.h.zero_point",
      cfg.h.zero_point ? format_double(*cfg.h.zero_point) : "none");
  put("problem.source.amplitude", format_double(cfg.source_amplitude));
  put("problem.source.sigma", format_double(cfg.source_sigma));
  put("problem.epsilon", format_double(cfg.epsilon));
  put("mesh.cells", std::to_string(cfg.cells));
  put("mesh.grading", format_double(cfg.grading));
  put("mesh.r_in", format_double(cfg.r_in));
  put("continuation.n_first", std::to_string(cfg.n_first));
  put("continuation.n_last", std::to_string(cfg.n_last));
  put("continuation.ratio", format_double(cfg.ratio));
  put("solver.tol", format_double(cfg.solver_tol));
  put("solver.max_iterations", std::to_string(cfg.max_iterations));
  put("continuation.tol", format_double(cfg.continuation_tol));
  put("seed", std::to_string(cfg.seed));
  for (const auto& axis : cfg.sweep) {
    std::string list;
    for (std::size_t i = 0; i < axis.values.size(); ++i) {
      if (i) list += ",";
      list += format_double(axis.values[i]);
    }
    os << "sweep." << axis.key << " = " << list << "\n";
  }
  return os.str();
}

/// Scenario-specific requirements, checked before any solve.
inline void validate_config(const ExperimentConfig& cfg) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(cfg.cells >= 8, "mesh.cells must be at least 8");
  require(cfg.grading >= 1.0, "mesh.grading must be >= 1");
  require(cfg.r_in >= 0.0 && cfg.r_in < 1.0, "mesh.r_in must lie in [0, 1)");
  require(cfg.n_first >= 1 && cfg.n_last >= cfg.n_first,
          "continuation levels must satisfy 1 <= n_first <= n_last");
  require(cfg.ratio > 1.0, "continuation.ratio must exceed 1");
  require(cfg.solver_tol > 0.0 && cfg.continuation_tol > 0.0,
          "tolerances must be positive");
  require(cfg.max_iterations >= 1, "solver.max_iterations must be >= 1");
  switch (cfg.scenario) {
    case Scenario::ExactRadial:
    case Scenario::TransformCrosscheck:
      require(cfg.p == 2.0, "the exact radial family needs p = 2");
      require(cfg.dim_n >= 3.0, "the exact radial family needs dim_n >= 3");
      require(cfg.epsilon > 0.0, "problem.epsilon must be positive");
      require(!nearly_equal(1.0 - cfg.theta + cfg.h.gamma2, 0.0),
              "critical degeneracy: 1 - theta + gamma2 = 0 has no profile");
      break;
    case Scenario::HZero:
      require(cfg.h.zero_point.has_value(),
              "h-zero scenario needs problem.h.zero_point");
      break;
    case Scenario::StrongSingular:
      require(cfg.h.gamma1 > 1.0,
              "strong-singular scenario needs problem.h.gamma1 > 1");
      break;
    case Scenario::ExponentAtlas:
      require(cfg.p > 1.0 && cfg.p < cfg.dim_n, "need 1 < p < dim_n");
      break;
    default:
      break;
  }
  if (cfg.scenario != Scenario::ExponentAtlas) {
    require(cfg.p > 1.0 && cfg.p < cfg.dim_n, "need 1 < p < dim_n");
    require(cfg.theta >= 0.0, "problem.theta must be >= 0");
  }
}

}  // namespace singlab
