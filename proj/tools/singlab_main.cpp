/// Command-line harness: run one scenario, sweep a parameter grid, or print
/// the closed-form exponent atlas for a parameter point.
///
///   singlab run <config> [--out DIR]
///   singlab sweep <config> [--out DIR] [--workers N]
///   singlab atlas --dim-n 3 --p 2 --theta 0.5 [--gamma1 G] [--gamma2 G] [--m M]
///
/// Exit codes: 0 all checks pass, 1 some check failed, 2 configuration
/// error, 3 solver failure.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "singlab/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw singlab::ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

singlab::ExperimentConfig load_config(const std::string& path,
                                      std::uint64_t seed_override,
                                      bool have_seed) {
  auto cfg = singlab::parse_config(read_file(path));
  if (have_seed) cfg.seed = seed_override;
  singlab::validate_config(cfg);
  return cfg;
}

void print_rows(const singlab::RunRecord& rec) {
  for (const auto& r : rec.result.rows) {
    std::printf("[%s] %s/%s measured=%.17g", r.pass ? "PASS" : "FAIL",
                r.scenario.c_str(), r.check.c_str(), r.measured);
    if (std::isfinite(r.tolerance))
      std::printf(" (target %.17g, tol %.17g)", r.predicted, r.tolerance);
    std::printf("\n");
  }
  std::printf("run: %s (%s, %.3fs) -> %s\n", rec.result.all_pass() ? "pass" : "FAIL",
              rec.result.status.c_str(), rec.result.wall_seconds,
              rec.directory.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for singular elliptic problems with "
               "degenerate coercivity on radial domains"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "runs/out";
  unsigned workers = 0;
  std::uint64_t seed = 0;
  bool have_seed = false;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "seed for randomized property suites")
        ->each([&](const std::string&) { have_seed = true; });
  };

  auto* run = app.add_subcommand("run", "run one scenario from a config file");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--out", out_dir, "run directory");
  add_seed(run);

  auto* sweep = app.add_subcommand("sweep", "run the Cartesian sweep of a config");
  sweep->add_option("config", config_path, "config file")->required();
  sweep->add_option("--out", out_dir, "sweep directory");
  sweep->add_option("--workers", workers, "max concurrent solves");
  add_seed(sweep);

  auto* atlas = app.add_subcommand("atlas", "print the exponent atlas for a point");
  double dim_n = 3.0, p = 2.0, theta = 0.0, gamma1 = 0.0, gamma2 = 0.0, m = 1.0;
  atlas->add_option("--dim-n", dim_n, "spatial dimension")->required();
  atlas->add_option("--p", p, "operator exponent")->required();
  atlas->add_option("--theta", theta, "degeneracy exponent")->required();
  atlas->add_option("--gamma1", gamma1, "blow-up rate of h at 0");
  atlas->add_option("--gamma2", gamma2, "decay rate of h at infinity");
  atlas->add_option("--m", m, "Lebesgue index of the datum");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto cfg = load_config(config_path, seed, have_seed);
      const auto rec = singlab::run_experiment(cfg, out_dir);
      print_rows(rec);
      return rec.exit_code();
    }
    if (sweep->parsed()) {
      const auto cfg = load_config(config_path, seed, have_seed);
      const auto records = singlab::run_sweep(cfg, out_dir, workers);
      int exit_code = 0;
      std::size_t passed = 0;
      for (const auto& rec : records) {
        exit_code = std::max(exit_code, rec.exit_code());
        passed += rec.all_pass() ? 1 : 0;
      }
      std::printf("sweep: %zu/%zu points pass -> %s\n", passed, records.size(),
                  out_dir.c_str());
      return exit_code;
    }
    if (atlas->parsed()) {
      singlab::ParameterSet ps{dim_n, p, theta, gamma1, gamma2, m};
      const auto rep = singlab::classify_regime(ps);
      std::fputs(singlab::serialize(rep).c_str(), stdout);
      return 0;
    }
  } catch (const singlab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const singlab::SolveError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}
