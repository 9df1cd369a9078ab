#pragma once

/// Vertex-centered finite-volume discretization of the radial problem, a
/// damped Newton solver for each regularized level n, and the warm-started
/// continuation n -> infinity that realizes the approximation scheme:
///
///   -div( a(T_n(u), grad u) ) = min(h(u), n) * min(f, n),
///
/// with a(s, xi) = |xi|^{p-2} xi / (1+s)^{theta(p-1)}.
///
/// The unknowns are nodal values u_0 .. u_{M-1}; u_M = 0 is the Dirichlet
/// value. The flux through the left face of the origin cell vanishes by
/// symmetry and the singular source is integrated in closed form over each
/// cell, so r = 0 is never sampled pointwise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "singlab/mesh.hpp"
#include "singlab/problem.hpp"
#include "singlab/scalar_functions.hpp"

namespace singlab {

inline constexpr double kUncapped = std::numeric_limits<double>::infinity();

struct DiscreteField {
  std::shared_ptr<const RadialMesh> mesh;
  std::vector<double> u;  // size cells()+1, u.back() == 0

  std::size_t unknowns() const { return mesh->cells(); }

  double sup() const { return *std::max_element(u.begin(), u.end()); }
  double min_value() const { return *std::min_element(u.begin(), u.end()); }

  bool finite() const {
    for (double v : u)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline DiscreteField zero_field(std::shared_ptr<const RadialMesh> mesh) {
  DiscreteField f;
  f.u.assign(mesh->cells() + 1, 0.0);
  f.mesh = std::move(mesh);
  return f;
}

inline DiscreteField constant_field(std::shared_ptr<const RadialMesh> mesh,
                                    double value) {
  DiscreteField f;
  f.u.assign(mesh->cells() + 1, value);
  f.u.back() = 0.0;
  f.mesh = std::move(mesh);
  return f;
}

/// Sample a radial profile at the nodes. Profiles that blow up at the origin
/// get the first interior value there; every acceptance metric is computed
/// away from that node or in integral form.
inline DiscreteField sample_field(std::shared_ptr<const RadialMesh> mesh,
                                  const std::function<double(double)>& profile) {
  DiscreteField f;
  const auto& r = mesh->node;
  f.u.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) f.u[i] = profile(r[i]);
  f.u.back() = 0.0;
  if (!std::isfinite(f.u.front())) f.u.front() = f.u[1];
  f.mesh = std::move(mesh);
  return f;
}

// ---------------------------------------------------------------------------
// Cell quadrature of the truncated source
// ---------------------------------------------------------------------------

namespace detail {

/// omega_{N-1} * integral_a^b r^{N-1} min(A r^{-sigma}, cap) dr, exact
/// piecewise power-law antiderivatives split at the cap crossing.
inline double capped_source_integral(double a, double b, double amplitude,
                                     double sigma, double cap, double dim_n,
                                     double omega) {
  if (amplitude <= 0.0 || b <= a) return 0.0;
  auto raw = [&](double lo, double hi) {
    return amplitude * power_integral(lo, hi, dim_n - 1.0 - sigma);
  };
  auto flat = [&](double lo, double hi) {
    return cap * power_integral(lo, hi, dim_n - 1.0);
  };
  if (!std::isfinite(cap)) return omega * raw(a, b);
  if (sigma == 0.0) return omega * (amplitude <= cap ? raw(a, b) : flat(a, b));
  const double rc = std::pow(amplitude / cap, 1.0 / sigma);
  if (sigma > 0.0) {  // f decreasing: capped on r < rc
    if (rc <= a) return omega * raw(a, b);
    if (rc >= b) return omega * flat(a, b);
    return omega * (flat(a, rc) + raw(rc, b));
  }
  // sigma < 0: f increasing, capped on r > rc
  if (rc >= b) return omega * raw(a, b);
  if (rc <= a) return omega * flat(a, b);
  return omega * (raw(a, rc) + flat(rc, b));
}

/// Lower-order factor as callables, so the direct model and the transformed
/// coercive problem share one assembly path.
struct LowerOrder {
  std::function<double(double)> value;
  std::function<double(double)> slope;
};

inline LowerOrder lower_order_of(const HModel& h) {
  return {[h](double s) { return h_eval(h, s); },
          [h](double s) { return h_derivative(h, s); }};
}

struct Assembly {
  const RadialMesh* mesh = nullptr;
  double p = 2.0;
  double theta_op = 0.0;   // coefficient exponent of the operator
  double cap = kUncapped;  // regularization level n (or +inf)
  double delta2 = 0.0;     // p-flux regularization, squared
  LowerOrder lower;
  std::vector<double> source;  // S_i per unknown cell
  double omega = 0.0;

  void build_source(const SourceSpec& src) {
    const std::size_t m = mesh->cells();
    source.resize(m);
    for (std::size_t i = 0; i < m; ++i)
      source[i] = capped_source_integral(mesh->cv_lo(i), mesh->cv_hi(i),
                                         src.amplitude, src.sigma, cap,
                                         mesh->dim_n, omega);
  }

  double psi(double d) const {
    if (p == 2.0) return d;
    return std::pow(d * d + delta2, 0.5 * (p - 2.0)) * d;
  }
  double psi_slope(double d) const {
    if (p == 2.0) return 1.0;
    const double q = d * d + delta2;
    return std::pow(q, 0.5 * (p - 2.0)) * (1.0 + (p - 2.0) * d * d / q);
  }

  double face_coeff(double ubar) const {
    if (theta_op == 0.0) return 1.0;
    return std::pow(1.0 + std::min(ubar, cap), -theta_op * (p - 1.0));
  }
  double face_coeff_slope(double ubar) const {  // d coeff / d ubar
    if (theta_op == 0.0 || ubar >= cap) return 0.0;
    const double e = -theta_op * (p - 1.0);
    return e * std::pow(1.0 + ubar, e - 1.0);
  }

  /// Flux F_{i+1/2} = omega r^{N-1} psi(D) coeff for faces i = 0..M-1.
  void fluxes(const std::vector<double>& u, std::vector<double>& f) const {
    const std::size_t m = mesh->cells();
    f.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double dr = mesh->node[i + 1] - mesh->node[i];
      const double d = (u[i + 1] - u[i]) / dr;
      const double rf = mesh->face(i);
      const double area = omega * std::pow(rf, mesh->dim_n - 1.0);
      f[i] = area * psi(d) * face_coeff(0.5 * (u[i] + u[i + 1]));
    }
  }

  double lower_capped(double s) const { return std::min(lower.value(s), cap); }
  double lower_capped_slope(double s) const {
    if (!(lower.value(s) < cap)) return 0.0;
    const double g = lower.slope(s);
    return std::isfinite(g) ? g : 0.0;
  }

  /// R_i = -(F_{i+1/2} - F_{i-1/2}) - h_n(u_i) S_i, with F_{-1/2} = 0.
  void residual(const std::vector<double>& u, std::vector<double>& flux,
                std::vector<double>& r) const {
    const std::size_t m = mesh->cells();
    fluxes(u, flux);
    r.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double left = i == 0 ? 0.0 : flux[i - 1];
      r[i] = -(flux[i] - left) - lower_capped(u[i]) * source[i];
    }
  }

  /// Tridiagonal Jacobian dR/du (lower, diag, upper per row).
  void jacobian(const std::vector<double>& u, std::vector<double>& lo,
                std::vector<double>& di, std::vector<double>& up) const {
    const std::size_t m = mesh->cells();
    lo.assign(m, 0.0);
    di.assign(m, 0.0);
    up.assign(m, 0.0);
    std::vector<double> dF_l(m), dF_r(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double dr = mesh->node[i + 1] - mesh->node[i];
      const double d = (u[i + 1] - u[i]) / dr;
      const double ubar = 0.5 * (u[i] + u[i + 1]);
      const double rf = mesh->face(i);
      const double area = omega * std::pow(rf, mesh->dim_n - 1.0);
      const double c = face_coeff(ubar);
      const double dc = face_coeff_slope(ubar);
      const double dpsi = psi_slope(d);
      dF_l[i] = area * (dpsi * (-1.0 / dr) * c + psi(d) * dc * 0.5);
      dF_r[i] = area * (dpsi * (1.0 / dr) * c + psi(d) * dc * 0.5);
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double dQ = lower_capped_slope(u[i]) * source[i];
      di[i] = -dF_l[i] - dQ;
      if (i + 1 < m) up[i] = -dF_r[i];
      if (i > 0) {
        di[i] += dF_r[i - 1];
        lo[i] = dF_l[i - 1];
      }
    }
  }
};

/// Thomas elimination; throws on a vanishing pivot.
inline void solve_tridiagonal(std::vector<double> lo, std::vector<double> di,
                              std::vector<double> up, std::vector<double> rhs,
                              std::vector<double>& x) {
  const std::size_t m = di.size();
  for (std::size_t i = 1; i < m; ++i) {
    if (di[i - 1] == 0.0)
      throw std::runtime_error("solve_tridiagonal: zero pivot");
    const double w = lo[i] / di[i - 1];
    di[i] -= w * up[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  if (di[m - 1] == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot");
  x.resize(m);
  x[m - 1] = rhs[m - 1] / di[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) x[i] = (rhs[i] - up[i] * x[i + 1]) / di[i];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct NewtonTrace {
  std::vector<double> residual2;  // 2-norm after each accepted step
  std::vector<double> steps;      // accepted step lengths
  double residual_inf = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct LevelTrace {
  std::int64_t level = 0;
  NewtonTrace newton;
  double sup_u = 0.0;
  std::array<double, 3> d = {0.0, 0.0, 0.0};  // truncated-energy differences
  bool d_valid = false;                       // false on the first level
};

struct SolveDiagnostics {
  std::array<double, 3> monitor_k = {1.0, 10.0, 100.0};
  std::vector<LevelTrace> levels;
  bool converged = false;          // d_k quiet on two consecutive levels
  bool divergence_signal = false;  // some d_k non-decreasing across 4 levels
  std::string message;
};

class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, SolveDiagnostics diag)
      : std::runtime_error(what), diagnostics(std::move(diag)) {}
  SolveDiagnostics diagnostics;
};

struct SolverOptions {
  double tol = 1e-12;              // ||R||_inf <= tol * (1 + ||Q||_inf)
  int max_iterations = 80;
  double min_step = std::pow(2.0, -30);
  double continuation_tol = 1e-10;  // d_k quiet threshold (relative)
};

// ---------------------------------------------------------------------------
// Assembly entry points
// ---------------------------------------------------------------------------

namespace detail {

inline Assembly make_assembly(const ProblemSpec& spec, const RadialMesh& mesh,
                              double cap, double delta_scale = 1.0) {
  spec.validate();
  Assembly a;
  a.mesh = &mesh;
  a.p = spec.p;
  a.theta_op = spec.theta;
  a.cap = cap;
  a.omega = unit_sphere_area(mesh.dim_n);
  if (spec.p != 2.0) {
    // Flux regularization keeps the Jacobian finite at D = 0 for p < 2; it
    // shrinks with the mesh so its footprint stays below the tolerances.
    const double d = 1e-10 * delta_scale * 8.0 / static_cast<double>(mesh.cells());
    a.delta2 = d * d;
  }
  a.lower = lower_order_of(spec.h);
  a.build_source(spec.source);
  return a;
}

}  // namespace detail

/// Finite-volume residual of `field` for the problem regularized at level
/// n_reg, one entry per unknown; identically zero characterizes the discrete
/// regularized solution.
inline std::vector<double> assemble_residual(const ProblemSpec& spec,
                                             std::int64_t n_reg,
                                             const DiscreteField& field) {
  if (n_reg < 1) throw std::invalid_argument("assemble_residual: n_reg must be >= 1");
  if (!field.finite())
    throw std::invalid_argument("assemble_residual: field carries NaN or Inf");
  auto a = detail::make_assembly(spec, *field.mesh, static_cast<double>(n_reg));
  std::vector<double> flux, r;
  a.residual(field.u, flux, r);
  return r;
}

/// Face fluxes of the (optionally uncapped) operator applied to `field`,
/// for the entropy and energy quadratures.
inline std::vector<double> face_fluxes(const ProblemSpec& spec,
                                       const DiscreteField& field,
                                       double cap = kUncapped) {
  auto a = detail::make_assembly(spec, *field.mesh, cap);
  std::vector<double> flux;
  a.fluxes(field.u, flux);
  return flux;
}

/// Cell integrals of the truncated source, one per unknown.
inline std::vector<double> source_cells(const ProblemSpec& spec,
                                        const RadialMesh& mesh,
                                        double cap = kUncapped) {
  auto a = detail::make_assembly(spec, mesh, cap);
  return a.source;
}

// ---------------------------------------------------------------------------
// Damped Newton
// ---------------------------------------------------------------------------

namespace detail {

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double norm_inf(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

inline NewtonTrace newton_solve(const Assembly& a, std::vector<double>& u,
                                const SolverOptions& opt) {
  const std::size_t m = a.mesh->cells();
  NewtonTrace trace;
  std::vector<double> flux, r, lo, di, up, du, trial(u.size()), rt, fluxt;
  auto q_scale = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      s = std::max(s, std::abs(a.lower_capped(v[i]) * a.source[i]));
    return s;
  };
  // The residual differences O(||F||) fluxes, so it cannot be evaluated
  // below the rounding floor eps * (2 ||F|| + ||Q||); the target includes it.
  auto target_for = [&](const std::vector<double>& v, double flux_inf) {
    const double qs = q_scale(v);
    return opt.tol * (1.0 + qs) +
           256.0 * std::numeric_limits<double>::epsilon() *
               (2.0 * flux_inf + qs + 1.0);
  };
  a.residual(u, flux, r);
  double r2 = norm2(r);
  for (int it = 0; it < opt.max_iterations; ++it) {
    const double target = target_for(u, norm_inf(flux));
    trace.residual_inf = norm_inf(r);
    if (trace.residual_inf <= target) {
      trace.converged = true;
      trace.iterations = it;
      return trace;
    }
    a.jacobian(u, lo, di, up);
    std::vector<double> rhs(m);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = -r[i];
    try {
      solve_tridiagonal(lo, di, up, rhs, du);
    } catch (const std::runtime_error&) {
      throw SolveError("newton_solve: singular Jacobian", {});
    }
    // Project the direction at active zero bounds and cap the step so the
    // iterate stays nonnegative.
    double t_bound = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (u[i] <= 0.0 && du[i] < 0.0) du[i] = 0.0;
      else if (du[i] < 0.0) t_bound = std::min(t_bound, u[i] / -du[i]);
    }
    double t = t_bound;
    bool accepted = false;
    while (t >= opt.min_step) {
      for (std::size_t i = 0; i < m; ++i) trial[i] = std::max(u[i] + t * du[i], 0.0);
      trial[m] = 0.0;
      a.residual(trial, fluxt, rt);
      const double rt2 = norm2(rt);
      if (rt2 <= (1.0 - 1e-4 * t) * r2 ||
          norm_inf(rt) <= target_for(trial, norm_inf(fluxt))) {
        u.swap(trial);
        r.swap(rt);
        r2 = rt2;
        trace.residual2.push_back(r2);
        trace.steps.push_back(t);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      trace.iterations = it + 1;
      trace.residual_inf = norm_inf(r);
      return trace;  // stalled; caller decides
    }
  }
  trace.iterations = opt.max_iterations;
  trace.residual_inf = norm_inf(r);
  trace.converged = trace.residual_inf <= target_for(u, norm_inf(flux));
  return trace;
}

}  // namespace detail

/// Solve one regularized problem at level n_reg by damped Newton from
/// `init`. Throws SolveError when Newton stalls or runs out of iterations.
inline std::pair<DiscreteField, NewtonTrace> solve_regularized(
    const ProblemSpec& spec, std::int64_t n_reg, const DiscreteField& init,
    const SolverOptions& opt = {}) {
  if (n_reg < 1) throw std::invalid_argument("solve_regularized: n_reg must be >= 1");
  if (!init.finite())
    throw std::invalid_argument("solve_regularized: init carries NaN or Inf");
  auto a = detail::make_assembly(spec, *init.mesh, static_cast<double>(n_reg),
                                 1.0 + init.sup());
  DiscreteField out = init;
  for (double& v : out.u) v = std::max(v, 0.0);
  out.u.back() = 0.0;
  NewtonTrace trace = detail::newton_solve(a, out.u, opt);
  if (!trace.converged) {
    SolveDiagnostics diag;
    LevelTrace lt;
    lt.level = n_reg;
    lt.newton = trace;
    lt.sup_u = out.sup();
    diag.levels.push_back(std::move(lt));
    const std::string msg =
        "Newton did not reach tolerance at level " + std::to_string(n_reg);
    diag.message = msg;
    throw SolveError(msg, std::move(diag));
  }
  return {std::move(out), std::move(trace)};
}

/// Strictly increasing geometric level schedule n_first, n_first*ratio, ...
/// capped at n_last (always included).
inline std::vector<std::int64_t> geometric_schedule(std::int64_t n_first,
                                                    std::int64_t n_last,
                                                    double ratio = 2.0) {
  if (n_first < 1 || n_last < n_first)
    throw std::invalid_argument("geometric_schedule: need 1 <= n_first <= n_last");
  if (!(ratio > 1.0))
    throw std::invalid_argument("geometric_schedule: ratio must exceed 1");
  std::vector<std::int64_t> out;
  double x = static_cast<double>(n_first);
  std::int64_t prev = 0;
  while (x < static_cast<double>(n_last)) {
    const auto n = static_cast<std::int64_t>(std::llround(x));
    if (n > prev) {
      out.push_back(n);
      prev = n;
    }
    x *= ratio;
  }
  if (prev < n_last) out.push_back(n_last);
  return out;
}

namespace detail {

/// || grad T_k(a) - grad T_k(b) ||_p with the radial volume weight.
inline double truncation_gap(const DiscreteField& fa, const DiscreteField& fb,
                             double k, double p) {
  const auto& mesh = *fa.mesh;
  double acc = 0.0;
  for (std::size_t i = 0; i < mesh.cells(); ++i) {
    const double dr = mesh.node[i + 1] - mesh.node[i];
    const double ga =
        (std::min(fa.u[i + 1], k) - std::min(fa.u[i], k)) / dr;
    const double gb =
        (std::min(fb.u[i + 1], k) - std::min(fb.u[i], k)) / dr;
    acc += std::pow(std::abs(ga - gb), p) * mesh.cell_volume(i);
  }
  return std::pow(acc, 1.0 / p);
}

/// || grad T_k(a) ||_p, normalization for the quiet test.
inline double truncation_norm(const DiscreteField& fa, double k, double p) {
  const auto& mesh = *fa.mesh;
  double acc = 0.0;
  for (std::size_t i = 0; i < mesh.cells(); ++i) {
    const double dr = mesh.node[i + 1] - mesh.node[i];
    const double ga = (std::min(fa.u[i + 1], k) - std::min(fa.u[i], k)) / dr;
    acc += std::pow(std::abs(ga), p) * mesh.cell_volume(i);
  }
  return std::pow(acc, 1.0 / p);
}

struct ContinuationCore {
  // Per-level assembly factory: lets the transformed route reuse the driver.
  std::function<Assembly(double cap, double delta_scale)> make;
};

inline std::pair<DiscreteField, SolveDiagnostics> continuation_drive(
    const ContinuationCore& core, std::shared_ptr<const RadialMesh> mesh,
    const std::vector<std::int64_t>& schedule, const DiscreteField& init,
    const SolverOptions& opt) {
  if (schedule.empty())
    throw std::invalid_argument("solve_continuation: empty schedule");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (schedule[i] <= schedule[i - 1])
      throw std::invalid_argument("solve_continuation: schedule must increase");

  SolveDiagnostics diag;
  DiscreteField cur = init;
  for (double& v : cur.u) v = std::max(v, 0.0);
  cur.u.back() = 0.0;
  DiscreteField prev = cur;
  int quiet_levels = 0;
  std::array<int, 3> streak = {0, 0, 0};
  std::array<double, 3> last_d = {-1.0, -1.0, -1.0};

  for (std::size_t li = 0; li < schedule.size(); ++li) {
    const std::int64_t n = schedule[li];
    Assembly a = core.make(static_cast<double>(n), 1.0 + cur.sup());
    LevelTrace lt;
    lt.level = n;
    lt.newton = newton_solve(a, cur.u, opt);
    lt.sup_u = cur.sup();
    if (!lt.newton.converged) {
      diag.levels.push_back(std::move(lt));
      const std::string msg = "continuation stalled at level " + std::to_string(n);
      diag.message = msg;
      throw SolveError(msg, std::move(diag));
    }
    if (li > 0) {
      lt.d_valid = true;
      bool quiet = true;
      for (int j = 0; j < 3; ++j) {
        const double k = diag.monitor_k[j];
        lt.d[j] = truncation_gap(cur, prev, k, a.p);
        const double ref = 1.0 + truncation_norm(cur, k, a.p);
        if (lt.d[j] > opt.continuation_tol * ref) quiet = false;
        if (last_d[j] >= 0.0) {
          streak[j] = lt.d[j] >= last_d[j] ? streak[j] + 1 : 0;
          if (streak[j] >= 3) diag.divergence_signal = true;
        }
        last_d[j] = lt.d[j];
      }
      quiet_levels = quiet ? quiet_levels + 1 : 0;
    }
    diag.levels.push_back(std::move(lt));
    prev = cur;
    if (quiet_levels >= 2) {
      diag.converged = true;
      break;
    }
  }
  return {std::move(cur), std::move(diag)};
}

}  // namespace detail

/// Warm-started continuation along `schedule`. Declares convergence once the
/// monitored truncation gaps d_k stay quiet on two consecutive levels;
/// records (without aborting) the divergence signal when some d_k is
/// non-decreasing across four consecutive levels.
inline std::pair<DiscreteField, SolveDiagnostics> solve_continuation(
    const ProblemSpec& spec, const std::vector<std::int64_t>& schedule,
    const DiscreteField& init, const SolverOptions& opt = {}) {
  spec.validate();
  auto mesh = init.mesh;
  detail::ContinuationCore core{[&spec, mesh](double cap, double scale) {
    return detail::make_assembly(spec, *mesh, cap, scale);
  }};
  return detail::continuation_drive(core, mesh, schedule, init, opt);
}

/// Solve by the coercivity change of variable: with v = Phi(u) the model
/// operator becomes the plain p-Laplacian and the lower-order factor becomes
/// h(Phi^-1(v)); the returned field is mapped back through Phi^-1.
inline std::pair<DiscreteField, SolveDiagnostics> transform_solve(
    const ProblemSpec& spec, const std::vector<std::int64_t>& schedule,
    const DiscreteField& init, const SolverOptions& opt = {}) {
  spec.validate();
  const double theta = spec.theta;
  ProblemSpec flat = spec;
  flat.theta = 0.0;

  auto mesh = init.mesh;
  const HModel h = spec.h;
  // For theta > 1 the range of Phi is bounded; iterates past it map to the
  // asymptotic value of h.
  auto inverse = [theta](double v) {
    if (theta > 1.0) {
      const double vmax = 1.0 / (theta - 1.0);
      if (v >= vmax * (1.0 - 1e-15))
        return std::numeric_limits<double>::infinity();
    }
    return phi_inverse(theta, v);
  };
  detail::LowerOrder lower{
      [h, inverse](double v) { return h_eval(h, inverse(v)); },
      [h, theta, inverse](double v) {
        const double s = inverse(v);
        if (!std::isfinite(s)) return 0.0;
        const double g = h_derivative(h, s);
        return std::isfinite(g) ? g * std::pow(1.0 + s, theta) : g;
      }};
  detail::ContinuationCore core{[&flat, mesh, lower](double cap, double scale) {
    auto a = detail::make_assembly(flat, *mesh, cap, scale);
    a.lower = lower;
    return a;
  }};

  DiscreteField vinit = init;
  for (std::size_t i = 0; i < vinit.u.size(); ++i)
    vinit.u[i] = phi_forward(theta, std::max(init.u[i], 0.0));
  auto [v, diag] = detail::continuation_drive(core, mesh, schedule, vinit, opt);
  DiscreteField out = v;
  for (std::size_t i = 0; i < out.u.size(); ++i)
    out.u[i] = phi_inverse(theta, v.u[i]);
  out.u.back() = 0.0;
  return {std::move(out), std::move(diag)};
}

}  // namespace singlab
