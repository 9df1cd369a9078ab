#pragma once

/// Scenario pipelines and the run/sweep drivers. Each scenario solves (or
/// samples) its instance, runs the checks it owns, and returns report rows;
/// the drivers persist report.csv, field.txt, diagnostics.csv and
/// config.echo into a run directory. report.csv is byte-deterministic for a
/// fixed configuration; wall-clock timings go to run.meta only.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <numeric>
#include <random>
#include <semaphore>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "singlab/config.hpp"
#include "singlab/exponents.hpp"
#include "singlab/regularity.hpp"
#include "singlab/solver.hpp"

namespace singlab {

struct CheckRow {
  std::string scenario;
  std::string check;
  double predicted = 0.0;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

inline CheckRow info_row(std::string scenario, std::string check, double value) {
  return {std::move(scenario), std::move(check), value, value,
          std::numeric_limits<double>::infinity(), true};
}

struct ScenarioResult {
  std::vector<CheckRow> rows;
  std::optional<DiscreteField> field;
  std::vector<LevelTrace> diag_levels;
  double wall_seconds = 0.0;
  std::string status = "ok";  // "ok" or "solver-failure"
  std::string message;

  bool all_pass() const {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return status == "ok";
  }
};

// ---------------------------------------------------------------------------
// Shared pieces
// ---------------------------------------------------------------------------

namespace detail {

inline ProblemSpec problem_from_config(const ExperimentConfig& cfg) {
  ProblemSpec spec;
  spec.dim_n = cfg.dim_n;
  spec.p = cfg.p;
  spec.theta = cfg.theta;
  spec.h = cfg.h;
  spec.source = SourceSpec{cfg.source_amplitude, cfg.source_sigma};
  spec.r_in = cfg.r_in;
  spec.validate();
  return spec;
}

inline std::shared_ptr<const RadialMesh> mesh_from_config(
    const ExperimentConfig& cfg, std::size_t cells = 0) {
  return std::make_shared<const RadialMesh>(
      build_mesh(cells ? cells : cfg.cells, cfg.grading, cfg.r_in, cfg.dim_n));
}

inline SolverOptions options_from_config(const ExperimentConfig& cfg) {
  SolverOptions opt;
  opt.tol = cfg.solver_tol;
  opt.continuation_tol = cfg.continuation_tol;
  opt.max_iterations = cfg.max_iterations;
  return opt;
}

inline std::vector<std::int64_t> schedule_from_config(const ExperimentConfig& cfg) {
  return geometric_schedule(cfg.n_first, cfg.n_last, cfg.ratio);
}

/// Volume-weighted relative L2 error of the nodal field against a profile;
/// nodes where the profile is not finite (the origin of a blow-up profile)
/// carry no weight.
inline double relative_l2_error(const DiscreteField& field,
                                const std::function<double(double)>& profile) {
  const auto& mesh = *field.mesh;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < mesh.cells(); ++i) {
    const double e = profile(mesh.node[i]);
    if (!std::isfinite(e)) continue;
    const double w = mesh.volume(mesh.cv_lo(i), mesh.cv_hi(i));
    num += w * (field.u[i] - e) * (field.u[i] - e);
    den += w * e * e;
  }
  return std::sqrt(num / den);
}

/// Max nodal relative error over nodes with finite nonzero profile value.
inline double relative_linf_error(const DiscreteField& field,
                                  const std::function<double(double)>& profile) {
  const auto& mesh = *field.mesh;
  double worst = 0.0;
  for (std::size_t i = 0; i < mesh.cells(); ++i) {
    const double e = profile(mesh.node[i]);
    if (!std::isfinite(e) || e == 0.0) continue;
    worst = std::max(worst, std::abs(field.u[i] - e) / std::abs(e));
  }
  return worst;
}

inline double max_nodal_error(const DiscreteField& field,
                              const std::function<double(double)>& profile) {
  const auto& mesh = *field.mesh;
  double worst = 0.0;
  for (std::size_t i = 0; i <= mesh.cells(); ++i) {
    const double e = profile(mesh.node[i]);
    if (!std::isfinite(e)) continue;
    worst = std::max(worst, std::abs(field.u[i] - e));
  }
  return worst;
}

inline double max_abs_diff(const DiscreteField& a, const DiscreteField& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.u.size(); ++i)
    worst = std::max(worst, std::abs(a.u[i] - b.u[i]));
  return worst;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

namespace scenarios {

/// Coercive manufactured case: quadratic reproduction at the configured mesh
/// plus the empirical convergence order measured on the quartic companion
/// over a mesh-doubling ladder ending at the configured size.
inline ScenarioResult manufactured(const ExperimentConfig& cfg) {
  ScenarioResult res;
  const std::string id = scenario_name(cfg.scenario);
  const auto mc = manufactured_solution(cfg.dim_n);
  const auto opt = detail::options_from_config(cfg);
  const auto schedule = detail::schedule_from_config(cfg);

  auto mesh = detail::mesh_from_config(cfg);
  auto [field, diag] = solve_continuation(mc.spec, schedule, zero_field(mesh), opt);
  res.rows.push_back({id, "max_nodal_error", 0.0,
                      detail::max_nodal_error(field, mc.exact), 1e-4, true});
  res.rows.back().pass = res.rows.back().measured <= 1e-4;

  const auto qc = manufactured_solution_quartic(cfg.dim_n);
  std::vector<double> logm, loge;
  for (std::size_t m = cfg.cells / 8; m <= cfg.cells; m *= 2) {
    auto qmesh = detail::mesh_from_config(cfg, m);
    auto [qf, qd] = solve_continuation(qc.spec, schedule, zero_field(qmesh), opt);
    logm.push_back(std::log(static_cast<double>(m)));
    loge.push_back(std::log(detail::max_nodal_error(qf, qc.exact)));
  }
  const std::size_t n = logm.size();
  const double mx = std::accumulate(logm.begin(), logm.end(), 0.0) / n;
  const double my = std::accumulate(loge.begin(), loge.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (logm[i] - mx) * (logm[i] - mx);
    sxy += (logm[i] - mx) * (loge[i] - my);
  }
  const double order = -sxy / sxx;
  res.rows.push_back({id, "convergence_order", 2.0, order, 0.2,
                      std::abs(order - 2.0) <= 0.2});

  res.diag_levels = diag.levels;
  res.field = std::move(field);
  return res;
}

/// Reproduce the exact radial profile through the full continuation. The
/// error gate is the volume-weighted relative L2 distance: the profile is
/// unbounded, so no pointwise-relative metric can converge near the origin
/// at a finite truncation level (the max nodal relative error is reported).
inline ScenarioResult exact_radial(const ExperimentConfig& cfg) {
  ScenarioResult res;
  const std::string id = scenario_name(cfg.scenario);
  const auto spec =
      exact_radial_problem(cfg.dim_n, cfg.theta, cfg.h.gamma2, cfg.epsilon);
  const auto sol =
      exact_radial_solution(cfg.dim_n, cfg.theta, cfg.h.gamma2, cfg.epsilon);
  auto mesh = detail::mesh_from_config(cfg);

  const auto t0 = std::chrono::steady_clock::now();
  auto [field, diag] = solve_continuation(spec, detail::schedule_from_config(cfg),
                                          zero_field(mesh),
                                          detail::options_from_config(cfg));
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  auto profile = [&sol](double r) { return sol(r); };
  const double l2 = detail::relative_l2_error(field, profile);
  res.rows.push_back({id, "rel_l2_error", 0.0, l2, 0.01, l2 <= 0.01});
  res.rows.push_back(info_row(id, "rel_linf_nodes",
                              detail::relative_linf_error(field, profile)));
  res.rows.push_back(info_row(id, "sup_u", field.sup()));
  res.rows.push_back(info_row(id, "source_amplitude", sol.amplitude));
  res.rows.push_back(info_row(id, "alpha", sol.alpha));

  res.diag_levels = diag.levels;
  res.field = std::move(field);
  return res;
}

/// Weak-tail exponents of the exact instance, fitted from the closed-form
/// profile sampled on the configured mesh, gated against the closed-form
/// targets (two-sided) and the guaranteed weak-tail pair (one-sided).
inline ScenarioResult tail_fit(const ExperimentConfig& cfg) {
  ScenarioResult res;
  const std::string id = scenario_name(cfg.scenario);
  const auto sol =
      exact_radial_solution(cfg.dim_n, cfg.theta, cfg.h.gamma2, cfg.epsilon);
  const auto pred =
      radial_exponents(cfg.dim_n, cfg.theta, cfg.h.gamma2, cfg.epsilon);
  auto mesh = detail::mesh_from_config(cfg);
  auto field = sample_field(mesh, [&sol](double r) { return sol(r); });

  FitWindow window{true, resolution_floor(*mesh)};
  const auto slevels = geometric_levels(0.5, 0.75 * field.sup(), 48);
  const auto sfit =
      fit_tail_exponent(slevels, distribution_function(field, slevels), window);
  double gmax = 0.0;
  for (std::size_t i = 0; i < mesh->cells(); ++i)
    gmax = std::max(gmax, std::abs((field.u[i + 1] - field.u[i]) /
                                   (mesh->node[i + 1] - mesh->node[i])));
  const auto glevels = geometric_levels(0.5, 0.75 * gmax, 48);
  const auto gfit =
      fit_tail_exponent(glevels, gradient_distribution(field, glevels), window);

  res.rows.push_back({id, "sol_tail_exponent", pred.sol_tail, sfit.exponent, 0.05,
                      std::abs(sfit.exponent - pred.sol_tail) <=
                          0.05 * pred.sol_tail});
  res.rows.push_back({id, "grad_tail_exponent", pred.grad_tail, gfit.exponent, 0.05,
                      std::abs(gfit.exponent - pred.grad_tail) <=
                          0.05 * pred.grad_tail});
  const auto mp = marcinkiewicz_exponents(cfg.dim_n, 2.0, cfg.theta, cfg.h.gamma2);
  res.rows.push_back({id, "sol_tail_above_guaranteed", mp.t, sfit.exponent, 0.1,
                      sfit.exponent >= mp.t * 0.9});
  res.rows.push_back({id, "grad_tail_above_guaranteed", mp.r, gfit.exponent, 0.1,
                      gfit.exponent >= mp.r * 0.9});
  res.rows.push_back(info_row(id, "sol_fit_r_squared", sfit.r_squared));
  res.rows.push_back(info_row(id, "grad_fit_r_squared", gfit.r_squared));
  res.field = std::move(field);
  return res;
}

/// Entropy-inequality residuals of the configured instance across a
/// mesh-refinement ladder: equality to solver precision for phi = 0, a
/// vanishing positive part for the other family members.
inline ScenarioResult entropy_check(const ExperimentConfig& cfg) {
  ScenarioResult res;
  const std::string id = scenario_name(cfg.scenario);
  const auto spec = detail::problem_from_config(cfg);
  const auto opt = detail::options_from_config(cfg);
  const auto schedule = detail::schedule_from_config(cfg);
  const std::vector<double> klist = {0.1, 1.0, 10.0};

  struct PhiCase {
    TestFunctionKind kind;
    const char* name;
  };
  const PhiCase phis[] = {{TestFunctionKind::Zero, "phi0"},
                          {TestFunctionKind::ScaledTruncation, "phi_trunc"},
                          {TestFunctionKind::Bump, "phi_bump"}};

  std::vector<std::size_t> ladder = {cfg.cells / 4, cfg.cells / 2, cfg.cells};
  std::vector<DiscreteField> fields;
  for (std::size_t m : ladder) {
    auto mesh = detail::mesh_from_config(cfg, m);
    auto [f, d] = solve_continuation(spec, schedule, zero_field(mesh), opt);
    if (m == cfg.cells) res.diag_levels = d.levels;
    fields.push_back(std::move(f));
  }

  for (const auto& pc : phis) {
    for (double k : klist) {
      std::vector<double> residual, scale;
      for (const auto& f : fields) {
        const auto phi = make_test_function(f, pc.kind, pc.kind == TestFunctionKind::Bump ? 1.0 : 0.5, 1.0);
        const auto er = entropy_residual(f, spec, phi, k);
        residual.push_back(er.residual);
        scale.push_back(er.scale);
      }
      std::ostringstream name;
      name << "residual_" << pc.name << "_k" << k;
      const double fine = residual.back() / scale.back();
      if (pc.kind == TestFunctionKind::Zero) {
        // Equality case: one-sided by the inequality, and within solver
        // precision in magnitude whenever no truncation was left active.
        res.rows.push_back({id, name.str(), 0.0, fine, 1e-6, fine <= 1e-6});
      } else {
        const double coarse = std::max(residual.front() / scale.front(), 0.0);
        const double fine_pos = std::max(fine, 0.0);
        const double cap = 10.0 / static_cast<double>(ladder.back());
        const bool trending = fine_pos <= std::max(coarse, 1e-9);
        res.rows.push_back(
            {id, name.str(), 0.0, fine_pos, cap, fine_pos <= cap && trending});
      }
    }
  }
  res.field = std::move(fields.back());
  return res;
}

/// Bounded solutions when h vanishes at zero_point, degeneracy unrestricted.
inline ScenarioResult h_zero(const ExperimentConfig& cfg) {
  ScenarioResult res;
  const std::string id = scenario_name(cfg.scenario);
  const auto spec = detail::problem_from_config(cfg);
  auto mesh = detail::mesh_from_config(cfg);
  auto [field, diag] = solve_continuation(spec, detail::schedule_from_config(cfg),
                                          zero_field(mesh),
                                          detail::options_from_config(cfg));
  const auto rep = bound_checks(field, spec, cfg.m);
  res.rows.push_back({id, "sup_below_zero_point", *spec.h.zero_point, rep.sup_u,
                      1e-8, rep.pass});
  res.diag_levels = diag.levels;
  res.field = std::move(field);
  return res;
}

/// Bounded regime m > N/p: the supremum is finite and mesh-stable.
inline ScenarioResult bounded(const ExperimentConfig& cfg) {
  ScenarioResult res;
  const std::string id = scenario_name(cfg.scenario);
  const auto spec = detail::problem_from_config(cfg);
  const auto opt = detail::options_from_config(cfg);
  const auto schedule = detail::schedule_from_config(cfg);

  auto coarse_mesh = detail::mesh_from_config(cfg, cfg.cells / 2);
  auto [coarse, dc] =
      solve_continuation(spec, schedule, zero_field(coarse_mesh), opt);
  auto mesh = detail::mesh_from_config(cfg);
  auto [field, diag] = solve_continuation(spec, schedule, zero_field(mesh), opt);

  const auto rep = bound_checks(field, spec, cfg.m);
  res.rows.push_back(
      {id, "sup_finite", 1.0, std::isfinite(rep.sup_u) ? 1.0 : 0.0, 0.0, rep.pass});
  const double drift = std::abs(field.sup() - coarse.sup()) / field.sup();
  res.rows.push_back({id, "sup_mesh_stability", 0.0, drift, 0.01, drift <= 0.01});
  res.rows.push_back(info_row(id, "sup_u", rep.sup_u));
  res.diag_levels = diag.levels;
  res.field = std::move(field);
  return res;
}

/// Direct versus change-of-variable solve of the exact instance; the routes
/// must agree within twice the direct route's measured relative L2 error.
inline ScenarioResult transform_crosscheck(const ExperimentConfig& cfg) {
  ScenarioResult res;
  const std::string id = scenario_name(cfg.scenario);
  const auto spec =
      exact_radial_problem(cfg.dim_n, cfg.theta, cfg.h.gamma2, cfg.epsilon);
  const auto sol =
      exact_radial_solution(cfg.dim_n, cfg.theta, cfg.h.gamma2, cfg.epsilon);
  const auto opt = detail::options_from_config(cfg);
  const auto schedule = detail::schedule_from_config(cfg);
  auto mesh = detail::mesh_from_config(cfg);

  auto [direct, d1] = solve_continuation(spec, schedule, zero_field(mesh), opt);
  auto [mapped, d2] = transform_solve(spec, schedule, zero_field(mesh), opt);

  auto profile = [&sol](double r) { return sol(r); };
  const double err_direct = detail::relative_l2_error(direct, profile);
  const double err_mapped = detail::relative_l2_error(mapped, profile);
  const double diff =
      detail::max_abs_diff(direct, mapped) / std::max(direct.sup(), 1.0);
  const double allowance = 2.0 * err_direct;
  res.rows.push_back(
      {id, "route_linf_rel_diff", 0.0, diff, allowance, diff <= allowance});
  res.rows.push_back(info_row(id, "rel_l2_error_direct", err_direct));
  res.rows.push_back(info_row(id, "rel_l2_error_transform", err_mapped));
  res.diag_levels = d1.levels;
  res.field = std::move(direct);
  return res;
}

/// Uniqueness regime probe: schedules and initial guesses must not matter.
inline ScenarioResult uniqueness_probe(const ExperimentConfig& cfg) {
  ScenarioResult res;
  const std::string id = scenario_name(cfg.scenario);
  const auto spec = detail::problem_from_config(cfg);
  if (!spec.h.decreasing())
    throw ConfigError("uniqueness-probe needs a decreasing h model");
  if (!(spec.source.amplitude > 0.0))
    throw ConfigError("uniqueness-probe needs a positive datum");
  const double min_m = uniqueness_min_m(cfg.dim_n, cfg.p, cfg.theta, cfg.h.gamma2);
  if (cfg.m < min_m || !spec.source.in_lebesgue(cfg.m, cfg.dim_n))
    throw ConfigError("uniqueness-probe: datum index below the uniqueness "
                      "threshold " + format_double(min_m));

  const auto opt = detail::options_from_config(cfg);
  auto mesh = detail::mesh_from_config(cfg);
  const auto sched_a = detail::schedule_from_config(cfg);
  const auto sched_b = geometric_schedule(cfg.n_first, cfg.n_last, 3.0);

  std::vector<DiscreteField> runs;
  for (const auto* sched : {&sched_a, &sched_b}) {
    for (double init : {0.0, 1.0}) {
      auto [f, d] = solve_continuation(spec, *sched,
                                       constant_field(mesh, init), opt);
      if (runs.empty()) res.diag_levels = d.levels;
      runs.push_back(std::move(f));
    }
  }
  double worst = 0.0;
  const double scale = std::max(runs.front().sup(), 1.0);
  for (std::size_t i = 0; i < runs.size(); ++i)
    for (std::size_t j = i + 1; j < runs.size(); ++j)
      worst = std::max(worst, detail::max_abs_diff(runs[i], runs[j]) / scale);
  res.rows.push_back(
      {id, "max_pairwise_rel_diff", 0.0, worst, 1e-8, worst <= 1e-8});
  res.rows.push_back({id, "uniqueness_min_m", min_m, cfg.m, 0.0, cfg.m >= min_m});
  res.field = std::move(runs.front());
  return res;
}

/// Supercritical degeneracy probe: the continuation must raise the
/// divergence signal (a monitored truncation gap non-decreasing across four
/// consecutive levels). The blow-up of sup u_n per level is reported too.
inline ScenarioResult threshold_probe(const ExperimentConfig& cfg) {
  ScenarioResult res;
  const std::string id = scenario_name(cfg.scenario);
  const auto spec = detail::problem_from_config(cfg);
  auto mesh = detail::mesh_from_config(cfg);

  SolveDiagnostics diag;
  try {
    auto [f, d] = solve_continuation(spec, detail::schedule_from_config(cfg),
                                     zero_field(mesh),
                                     detail::options_from_config(cfg));
    diag = std::move(d);
    res.field = std::move(f);
  } catch (const SolveError& e) {
    diag = e.diagnostics;  // a late stall still carries the signal history
    res.message = e.what();
  }
  res.rows.push_back({id, "divergence_signal", 1.0,
                      diag.divergence_signal ? 1.0 : 0.0, 0.0,
                      diag.divergence_signal});
  if (diag.levels.size() >= 2) {
    const double growth = diag.levels.back().sup_u /
                          std::max(diag.levels[diag.levels.size() - 2].sup_u, 1e-300);
    res.rows.push_back(info_row(id, "sup_growth_last_level", growth));
  }
  res.diag_levels = diag.levels;
  return res;
}

/// Strongly singular lower-order term: the trace-carrying truncation power
/// has a mesh-stable energy. Experimental regime, no convergence guarantee.
inline ScenarioResult strong_singular(const ExperimentConfig& cfg) {
  ScenarioResult res;
  const std::string id = scenario_name(cfg.scenario);
  const auto spec = detail::problem_from_config(cfg);
  const auto opt = detail::options_from_config(cfg);
  const auto schedule = detail::schedule_from_config(cfg);

  auto coarse_mesh = detail::mesh_from_config(cfg, cfg.cells / 4);
  auto [coarse, dc] =
      solve_continuation(spec, schedule, zero_field(coarse_mesh), opt);
  auto mesh = detail::mesh_from_config(cfg);
  auto [field, diag] = solve_continuation(spec, schedule, zero_field(mesh), opt);

  const double k = 1.0;
  const double ec = strong_singular_trace(coarse, spec.h.gamma1, k, spec.p);
  const double ef = strong_singular_trace(field, spec.h.gamma1, k, spec.p);
  const double ratio_drift = std::abs(ef / ec - 1.0);
  res.rows.push_back({id, "trace_energy_mesh_drift", 0.0, ratio_drift, 0.1,
                      ratio_drift <= 0.1});
  res.rows.push_back(
      info_row(id, "trace_power", trace_power(spec.h.gamma1, spec.p)));
  res.rows.push_back(info_row(id, "trace_energy", ef));
  res.diag_levels = diag.levels;
  res.field = std::move(field);
  return res;
}

/// Closed-form exponent atlas: no solve. Emits the regime report of the
/// configured point (or of every sweep point, when axes are present) plus
/// the small-index continuity gap as a live check.
inline ScenarioResult exponent_atlas(const ExperimentConfig& cfg) {
  ScenarioResult res;
  auto emit_point = [&res](const ExperimentConfig& point, const std::string& id) {
    ParameterSet ps{point.dim_n, point.p, point.theta, point.h.gamma1,
                    point.h.gamma2, point.m};
    const auto rep = classify_regime(ps);
    auto opt_val = [](const std::optional<double>& v) {
      return v ? *v : std::numeric_limits<double>::quiet_NaN();
    };
    res.rows.push_back(info_row(id, "theta_max", rep.theta_max));
    res.rows.push_back(info_row(id, "existence_ok", rep.existence_ok ? 1.0 : 0.0));
    res.rows.push_back(info_row(id, "marc_t", opt_val(rep.marc_t)));
    res.rows.push_back(info_row(id, "marc_r", opt_val(rep.marc_r)));
    res.rows.push_back(info_row(id, "sol_lebesgue_exp", opt_val(rep.sol_lebesgue_exp)));
    res.rows.push_back(
        info_row(id, "grad_lebesgue_exp", opt_val(rep.grad_lebesgue_exp)));
    res.rows.push_back(info_row(id, "finite_energy", rep.finite_energy ? 1.0 : 0.0));
    res.rows.push_back(info_row(id, "bounded", rep.bounded ? 1.0 : 0.0));
    res.rows.push_back(info_row(id, "every_lq", rep.every_lq ? 1.0 : 0.0));
    res.rows.push_back(info_row(id, "uniqueness_min_m", opt_val(rep.uniqueness_min_m)));
    res.rows.push_back(
        info_row(id, "distributional_min_m", opt_val(rep.distributional_min_m)));
    // Continuity of the refined exponents into the weak-tail pair at m -> 1.
    const double lo = weak_tail_lower(point.p, point.h.gamma2);
    const double hi = existence_threshold(point.p, point.h.gamma2);
    if (point.theta >= lo && point.theta < hi && !nearly_equal(point.theta, hi)) {
      const auto mp = marcinkiewicz_exponents(point.dim_n, point.p, point.theta,
                                              point.h.gamma2);
      const auto lr = lebesgue_regularity(point.dim_n, point.p, point.theta,
                                          point.h.gamma2, 1.0 + 1e-8);
      if (lr.sol_exp && lr.grad_exp) {
        const double gap = std::max(std::abs(*lr.sol_exp - mp.t) / mp.t,
                                    std::abs(*lr.grad_exp - mp.r) / mp.r);
        res.rows.push_back(
            {id, "m_continuity_gap", 0.0, gap, 1e-6, gap <= 1e-6});
      }
    }
  };

  if (cfg.sweep.empty()) {
    emit_point(cfg, scenario_name(cfg.scenario));
    return res;
  }
  // Inline expansion over the Cartesian product of the axes.
  std::vector<std::size_t> idx(cfg.sweep.size(), 0);
  while (true) {
    ExperimentConfig point = cfg;
    point.sweep.clear();
    std::ostringstream id;
    id << scenario_name(cfg.scenario);
    for (std::size_t a = 0; a < cfg.sweep.size(); ++a) {
      set_numeric(point, cfg.sweep[a].key, cfg.sweep[a].values[idx[a]]);
      id << "[" << cfg.sweep[a].key << "=" << format_double(cfg.sweep[a].values[idx[a]])
         << "]";
    }
    emit_point(point, id.str());
    std::size_t a = 0;
    for (; a < idx.size(); ++a) {
      if (++idx[a] < cfg.sweep[a].values.size()) break;
      idx[a] = 0;
    }
    if (a == idx.size()) break;
  }
  return res;
}

}  // namespace scenarios

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

inline ScenarioResult run_scenario(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioResult res;
  try {
    switch (cfg.scenario) {
      case Scenario::Manufactured: res = scenarios::manufactured(cfg); break;
      case Scenario::ExactRadial: res = scenarios::exact_radial(cfg); break;
      case Scenario::TailFit: res = scenarios::tail_fit(cfg); break;
      case Scenario::EntropyCheck: res = scenarios::entropy_check(cfg); break;
      case Scenario::HZero: res = scenarios::h_zero(cfg); break;
      case Scenario::Bounded: res = scenarios::bounded(cfg); break;
      case Scenario::TransformCrosscheck:
        res = scenarios::transform_crosscheck(cfg);
        break;
      case Scenario::UniquenessProbe: res = scenarios::uniqueness_probe(cfg); break;
      case Scenario::ThresholdProbe: res = scenarios::threshold_probe(cfg); break;
      case Scenario::StrongSingular: res = scenarios::strong_singular(cfg); break;
      case Scenario::ExponentAtlas: res = scenarios::exponent_atlas(cfg); break;
    }
  } catch (const SolveError& e) {
    res.status = "solver-failure";
    res.message = e.what();
    res.diag_levels = e.diagnostics.levels;
  }
  if (res.wall_seconds == 0.0)
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

struct RunRecord {
  ExperimentConfig config;
  std::string directory;
  ScenarioResult result;

  bool all_pass() const { return result.all_pass(); }
  int exit_code() const {
    if (result.status != "ok") return 3;
    return all_pass() ? 0 : 1;
  }
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::string report_csv(const std::vector<CheckRow>& rows) {
  std::ostringstream os;
  os << "schema=1\n";
  os << "scenario,check,predicted,measured,tolerance,pass\n";
  for (const auto& r : rows)
    os << r.scenario << "," << r.check << "," << format_double(r.predicted) << ","
       << format_double(r.measured) << "," << format_double(r.tolerance) << ","
       << (r.pass ? 1 : 0) << "\n";
  return os.str();
}

inline std::string diagnostics_csv(const std::vector<LevelTrace>& levels) {
  std::ostringstream os;
  os << "schema=1\n";
  os << "level,newton_iterations,residual_inf,sup_u,d1,d10,d100,converged\n";
  for (const auto& lt : levels) {
    os << lt.level << "," << lt.newton.iterations << ","
       << format_double(lt.newton.residual_inf) << "," << format_double(lt.sup_u);
    for (int j = 0; j < 3; ++j)
      os << "," << (lt.d_valid ? format_double(lt.d[j]) : std::string("none"));
    os << "," << (lt.newton.converged ? 1 : 0) << "\n";
  }
  return os.str();
}

inline std::string field_txt(const DiscreteField& field) {
  std::ostringstream os;
  for (std::size_t i = 0; i < field.u.size(); ++i)
    os << format_double(field.mesh->node[i]) << " " << format_double(field.u[i])
       << "\n";
  return os.str();
}

}  // namespace detail

/// Execute one scenario and persist its artifacts into `outdir`.
inline RunRecord run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);
  RunRecord rec;
  rec.config = cfg;
  rec.directory = outdir.string();
  rec.result = run_scenario(cfg);

  detail::write_text(outdir / "config.echo", echo_config(cfg));
  detail::write_text(outdir / "report.csv", detail::report_csv(rec.result.rows));
  detail::write_text(outdir / "diagnostics.csv",
                     detail::diagnostics_csv(rec.result.diag_levels));
  if (rec.result.field)
    detail::write_text(outdir / "field.txt", detail::field_txt(*rec.result.field));
  {
    std::ostringstream meta;
    meta << "status=" << rec.result.status << "\n";
    if (!rec.result.message.empty()) meta << "message=" << rec.result.message << "\n";
    meta << "wall_seconds=" << format_double(rec.result.wall_seconds) << "\n";
    detail::write_text(outdir / "run.meta", meta.str());
  }
  return rec;
}

/// Materialize the Cartesian product of the sweep axes.
inline std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep.empty()) return {cfg};
  std::size_t total = 1;
  for (const auto& axis : cfg.sweep) {
    if (axis.values.empty()) throw ConfigError("sweep axis with no values");
    total *= axis.values.size();
    if (total > 10000) throw ConfigError("sweep larger than 10^4 points");
  }
  std::vector<ExperimentConfig> points;
  points.reserve(total);
  std::vector<std::size_t> idx(cfg.sweep.size(), 0);
  while (true) {
    ExperimentConfig point = cfg;
    point.sweep.clear();
    for (std::size_t a = 0; a < cfg.sweep.size(); ++a)
      set_numeric(point, cfg.sweep[a].key, cfg.sweep[a].values[idx[a]]);
    points.push_back(std::move(point));
    std::size_t a = 0;
    for (; a < idx.size(); ++a) {
      if (++idx[a] < cfg.sweep[a].values.size()) break;
      idx[a] = 0;
    }
    if (a == idx.size()) break;
  }
  return points;
}

/// Run every sweep point (validated up front) concurrently up to `workers`,
/// then aggregate one summary row per point in schedule order.
inline std::vector<RunRecord> run_sweep(const ExperimentConfig& cfg,
                                        const std::filesystem::path& outdir,
                                        unsigned workers = 0) {
  const auto points = expand_sweep(cfg);
  for (const auto& p : points) validate_config(p);
  if (workers == 0)
    workers = std::max(1u, std::thread::hardware_concurrency());

  std::filesystem::create_directories(outdir);
  std::vector<RunRecord> records(points.size());
  std::counting_semaphore<256> gate(std::min<unsigned>(workers, 256));
  std::vector<std::future<void>> tasks;
  tasks.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    gate.acquire();
    tasks.push_back(std::async(std::launch::async, [&, i] {
      char name[32];
      std::snprintf(name, sizeof name, "point-%04zu", i);
      try {
        records[i] = run_experiment(points[i], outdir / name);
      } catch (...) {
        gate.release();
        throw;
      }
      gate.release();
    }));
  }
  for (auto& t : tasks) t.get();

  std::ostringstream os;
  os << "schema=1\n";
  os << "point";
  for (const auto& axis : cfg.sweep) os << "," << axis.key;
  os << ",status,checks,failed,pass\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    os << i;
    // Point order is axis-0-fastest, matching expand_sweep.
    std::size_t rem = i;
    for (const auto& axis : cfg.sweep) {
      const std::size_t pos = rem % axis.values.size();
      rem /= axis.values.size();
      os << "," << format_double(axis.values[pos]);
    }
    std::size_t failed = 0;
    for (const auto& r : records[i].result.rows)
      if (!r.pass) ++failed;
    os << "," << records[i].result.status << "," << records[i].result.rows.size()
       << "," << failed << "," << (records[i].all_pass() ? 1 : 0) << "\n";
  }
  detail::write_text(outdir / "summary.csv", os.str());
  return records;
}

}  // namespace singlab
