#pragma once

/// Measurements on discrete fields: superlevel-set distribution functions,
/// weak-tail (power-law) exponent fits, truncated energies, the entropy
/// inequality residual, the logarithmic superlevel decay bound, boundedness
/// checks, and the strongly singular boundary trace energy.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "singlab/exponents.hpp"
#include "singlab/solver.hpp"

namespace singlab {

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Distribution functions
// ---------------------------------------------------------------------------

/// Volume of {interpolant of u > k}, resolved exactly within each cell of
/// the piecewise-linear interpolant (strict inequality keeps the map
/// right-continuous in k).
inline double superlevel_measure(const DiscreteField& field, double k) {
  const auto& mesh = *field.mesh;
  double acc = 0.0;
  for (std::size_t i = 0; i < mesh.cells(); ++i) {
    const double a = field.u[i], b = field.u[i + 1];
    const double ra = mesh.node[i], rb = mesh.node[i + 1];
    if (a > k && b > k) {
      acc += mesh.volume(ra, rb);
    } else if (a > k || b > k) {
      const double rc = ra + (k - a) / (b - a) * (rb - ra);
      acc += a > k ? mesh.volume(ra, rc) : mesh.volume(rc, rb);
    }
  }
  return acc;
}

inline std::vector<double> distribution_function(const DiscreteField& field,
                                                 const std::vector<double>& levels) {
  std::vector<double> out(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0) || (i > 0 && levels[i] <= levels[i - 1]))
      throw std::invalid_argument("distribution_function: levels must be "
                                  "positive and increasing");
    out[i] = superlevel_measure(field, levels[i]);
  }
  return out;
}

/// |{ |grad u| > lambda }| with the cell-wise difference-quotient gradient.
inline std::vector<double> gradient_distribution(const DiscreteField& field,
                                                 const std::vector<double>& levels) {
  const auto& mesh = *field.mesh;
  std::vector<double> g(mesh.cells()), vol(mesh.cells());
  for (std::size_t i = 0; i < mesh.cells(); ++i) {
    g[i] = std::abs((field.u[i + 1] - field.u[i]) /
                    (mesh.node[i + 1] - mesh.node[i]));
    vol[i] = mesh.cell_volume(i);
  }
  std::vector<double> out(levels.size());
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (!(levels[j] > 0.0) || (j > 0 && levels[j] <= levels[j - 1]))
      throw std::invalid_argument("gradient_distribution: levels must be "
                                  "positive and increasing");
    double acc = 0.0;
    for (std::size_t i = 0; i < mesh.cells(); ++i)
      if (g[i] > levels[j]) acc += vol[i];
    out[j] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tail exponent fit
// ---------------------------------------------------------------------------

struct TailFit {
  double exponent = 0.0;   // decay rate, reported positive
  double intercept = 0.0;  // log-measure at log-level 0
  double r_squared = 0.0;
  double k_min = 0.0, k_max = 0.0;
  std::size_t samples = 0;
};

struct FitWindow {
  bool drop_first_decade = true;  // the smallest decade is discretization floor
  double min_measure = 0.0;       // resolution floor (e.g. a few cells' volume)
};

/// Least-squares slope of log(measure) against log(level) over the window.
inline TailFit fit_tail_exponent(const std::vector<double>& levels,
                                 const std::vector<double>& measures,
                                 const FitWindow& window = {}) {
  if (levels.size() != measures.size())
    throw std::invalid_argument("fit_tail_exponent: size mismatch");
  double k_floor = 0.0;
  if (window.drop_first_decade) {
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (measures[i] > window.min_measure) {
        k_floor = 10.0 * levels[i];
        break;
      }
  }
  std::vector<double> x, y;
  TailFit fit;
  fit.k_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (measures[i] <= window.min_measure || levels[i] < k_floor) continue;
    x.push_back(std::log(levels[i]));
    y.push_back(std::log(measures[i]));
    fit.k_min = std::min(fit.k_min, levels[i]);
    fit.k_max = std::max(fit.k_max, levels[i]);
  }
  if (x.size() < 6)
    throw InsufficientData("fit_tail_exponent: fewer than 6 usable samples "
                           "inside the fit window");
  const std::size_t n = x.size();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  fit.exponent = -slope;
  fit.intercept = my - slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.samples = n;
  return fit;
}

/// Geometric level grid, lo * ratio^j up to hi inclusive.
inline std::vector<double> geometric_levels(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0 && hi > lo && count >= 2))
    throw std::invalid_argument("geometric_levels: need 0 < lo < hi, count >= 2");
  std::vector<double> out(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo * std::exp(step * static_cast<double>(i));
  return out;
}

/// Resolution floor used by the fit window: the volume of the ten smallest
/// cells, below which a superlevel set is under-resolved.
inline double resolution_floor(const RadialMesh& mesh) {
  std::vector<double> vols(mesh.cells());
  for (std::size_t i = 0; i < mesh.cells(); ++i) vols[i] = mesh.cell_volume(i);
  std::sort(vols.begin(), vols.end());
  const std::size_t n = std::min<std::size_t>(10, vols.size());
  return std::accumulate(vols.begin(), vols.begin() + n, 0.0);
}

// ---------------------------------------------------------------------------
// Truncated energy and the auxiliary tail bound
// ---------------------------------------------------------------------------

/// integral of |grad T_k(u)|^p with the radial volume weight.
inline double truncated_energy(const DiscreteField& field, double k, double p) {
  if (!(k > 0.0)) throw std::invalid_argument("truncated_energy: k must be > 0");
  return std::pow(detail::truncation_norm(field, k, p), p);
}

struct AuxCheckReport {
  bool applicable = false;
  double eta = 0.0;        // fitted truncated-energy growth rate
  double sol_bound = 0.0;  // guaranteed solution tail N(p-eta)/(N-p)
  double grad_bound = 0.0; // guaranteed gradient tail N(p-eta)/(N-eta)
  TailFit sol_fit;
  TailFit grad_fit;
  bool pass = false;
  std::string note;
};

/// Fit the truncated-energy growth eta, derive the guaranteed weak-tail
/// exponents, and verify the measured tails stay above them (one-sided,
/// relative slack `tol`).
inline AuxCheckReport aux_check(const DiscreteField& field, double p,
                                double tol = 0.1) {
  AuxCheckReport rep;
  const double N = field.mesh->dim_n;
  const double sup = field.sup();
  if (sup < 16.0) {
    rep.note = "field range too small for a tail fit; check degenerates";
    return rep;
  }
  rep.applicable = true;

  const auto kgrid = geometric_levels(1.0, 0.75 * sup, 32);
  std::vector<double> le(kgrid.size()), lk(kgrid.size());
  for (std::size_t i = 0; i < kgrid.size(); ++i) {
    le[i] = std::log(truncated_energy(field, kgrid[i], p));
    lk[i] = std::log(kgrid[i]);
  }
  const std::size_t n = kgrid.size();
  const double mx = std::accumulate(lk.begin(), lk.end(), 0.0) / n;
  const double my = std::accumulate(le.begin(), le.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lk[i] - mx) * (lk[i] - mx);
    sxy += (lk[i] - mx) * (le[i] - my);
  }
  rep.eta = std::clamp(sxy / sxx, 0.0, p - 1e-9);
  rep.sol_bound = N * (p - rep.eta) / (N - p);
  rep.grad_bound = N * (p - rep.eta) / (N - rep.eta);

  FitWindow window{true, resolution_floor(*field.mesh)};
  const auto slevels = geometric_levels(0.5, 0.75 * sup, 48);
  rep.sol_fit =
      fit_tail_exponent(slevels, distribution_function(field, slevels), window);
  double gmax = 0.0;
  const auto& mesh = *field.mesh;
  for (std::size_t i = 0; i < mesh.cells(); ++i)
    gmax = std::max(gmax, std::abs((field.u[i + 1] - field.u[i]) /
                                   (mesh.node[i + 1] - mesh.node[i])));
  const auto glevels = geometric_levels(0.5, 0.75 * gmax, 48);
  rep.grad_fit =
      fit_tail_exponent(glevels, gradient_distribution(field, glevels), window);

  rep.pass = rep.sol_fit.exponent >= rep.sol_bound * (1.0 - tol) &&
             rep.grad_fit.exponent >= rep.grad_bound * (1.0 - tol);
  return rep;
}

// ---------------------------------------------------------------------------
// Entropy inequality residual
// ---------------------------------------------------------------------------

enum class TestFunctionKind { Zero, ScaledTruncation, Bump };

/// Built-in bounded test functions vanishing on the boundary.
inline std::vector<double> make_test_function(const DiscreteField& field,
                                              TestFunctionKind kind, double c = 0.5,
                                              double j = 1.0) {
  const auto& mesh = *field.mesh;
  std::vector<double> phi(field.u.size(), 0.0);
  switch (kind) {
    case TestFunctionKind::Zero:
      break;
    case TestFunctionKind::ScaledTruncation:
      for (std::size_t i = 0; i < phi.size(); ++i)
        phi[i] = c * truncate(j, field.u[i]);
      break;
    case TestFunctionKind::Bump:
      for (std::size_t i = 0; i < phi.size(); ++i)
        phi[i] = c * (1.0 - mesh.node[i] * mesh.node[i]);
      break;
  }
  return phi;
}

struct EntropyResidual {
  double lhs = 0.0;       // energy side: a(u, grad u) . grad T_k(u - phi)
  double rhs = 0.0;       // work side:   h(u) f T_k(u - phi)
  double residual = 0.0;  // lhs - rhs; <= 0 up to discretization
  double scale = 1.0;     // |lhs| + |rhs| + 1
};

/// Evaluate both sides of the entropy inequality for the true (uncapped)
/// problem with the scheme-consistent quadratures: face fluxes against the
/// nodal differences of T_k(u - phi), cell sources against its nodal values.
inline EntropyResidual entropy_residual(const DiscreteField& field,
                                        const ProblemSpec& spec,
                                        const std::vector<double>& phi, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("entropy_residual: k must be > 0");
  if (phi.size() != field.u.size())
    throw std::invalid_argument("entropy_residual: test function size mismatch");
  for (double v : phi)
    if (!std::isfinite(v))
      throw std::invalid_argument("entropy_residual: test function not finite");
  if (std::abs(phi.back()) > 1e-12 * (1.0 + std::abs(phi.front())))
    throw std::invalid_argument("entropy_residual: test function must vanish "
                                "on the boundary");

  const auto& mesh = *field.mesh;
  const std::size_t m = mesh.cells();
  std::vector<double> psi(field.u.size());
  for (std::size_t i = 0; i < psi.size(); ++i)
    psi[i] = truncate(k, field.u[i] - phi[i]);

  const auto flux = face_fluxes(spec, field, kUncapped);
  const auto cells = source_cells(spec, *field.mesh, kUncapped);

  EntropyResidual out;
  for (std::size_t i = 0; i < m; ++i) out.lhs += flux[i] * (psi[i + 1] - psi[i]);
  for (std::size_t i = 0; i < m; ++i) {
    const double hv = h_eval(spec.h, field.u[i]);
    const double term = hv * cells[i] * psi[i];
    if (!std::isfinite(term))
      throw std::domain_error("entropy_residual: lower-order term not "
                              "integrable against the test function");
    out.rhs += term;
  }
  out.residual = out.lhs - out.rhs;
  out.scale = std::abs(out.lhs) + std::abs(out.rhs) + 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Logarithmic superlevel decay
// ---------------------------------------------------------------------------

struct LogDecayReport {
  double exponent = 0.0;        // N(p-1)/(N-p)
  std::vector<double> c_fit;    // per continuation field
  bool stable = false;          // last three constants within +-10%
  bool pass = false;
};

/// Fit the smallest constant c with |{u_n >= k}| <= c / log(1+k)^e over the
/// level grid, per field, and require it uniformly stable across the last
/// continuation levels.
inline LogDecayReport log_decay_check(const std::vector<DiscreteField>& fields,
                                      double p) {
  if (fields.size() < 3)
    throw InsufficientData("log_decay_check: need at least 3 continuation levels");
  const double N = fields.front().mesh->dim_n;
  LogDecayReport rep;
  rep.exponent = N * (p - 1.0) / (N - p);
  for (const auto& f : fields) {
    const double sup = f.sup();
    double c = 0.0;
    if (sup > 2.0) {
      for (double k : geometric_levels(2.0, std::max(4.0, 0.9 * sup), 32)) {
        const double mu = superlevel_measure(f, k);
        c = std::max(c, mu * std::pow(std::log1p(k), rep.exponent));
      }
    }
    rep.c_fit.push_back(c);
  }
  const std::size_t n = rep.c_fit.size();
  double lo = rep.c_fit[n - 3], hi = rep.c_fit[n - 3];
  for (std::size_t i = n - 3; i < n; ++i) {
    lo = std::min(lo, rep.c_fit[i]);
    hi = std::max(hi, rep.c_fit[i]);
  }
  rep.stable = hi == 0.0 || hi <= 1.2 * std::max(lo, 1e-300);
  rep.pass = rep.stable && std::isfinite(hi);
  return rep;
}

// ---------------------------------------------------------------------------
// Boundedness checks
// ---------------------------------------------------------------------------

struct BoundReport {
  std::string regime;  // "h-zero" or "integrable-datum"
  double sup_u = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
};

/// Boundedness claims: the zero-variant ceiling u <= s-bar, or the bounded
/// regime m > N/p where only the measured supremum is reported.
inline BoundReport bound_checks(const DiscreteField& field, const ProblemSpec& spec,
                                double m) {
  BoundReport rep;
  rep.sup_u = field.sup();
  if (spec.h.zero_point) {
    rep.regime = "h-zero";
    rep.bound = *spec.h.zero_point + 1e-8;
    rep.pass = rep.sup_u <= rep.bound;
    return rep;
  }
  const double n_over_p = spec.dim_n / spec.p;
  if (m > n_over_p && spec.source.in_lebesgue(m, spec.dim_n)) {
    rep.regime = "integrable-datum";
    rep.pass = std::isfinite(rep.sup_u);
    return rep;
  }
  throw RegimeError("bound_checks: no boundedness claim applies (need the "
                    "zero variant of h, or datum index m > N/p)");
}

// ---------------------------------------------------------------------------
// Strongly singular boundary trace
// ---------------------------------------------------------------------------

/// Exponent of the truncation power carrying the boundary datum when h blows
/// up faster than linearly.
inline double trace_power(double gamma1, double p) {
  return (gamma1 - 1.0 + p) / p;
}

/// W^{1,p} energy of T_k(u)^{(gamma1-1+p)/p}; stable under refinement even
/// when the energy of T_k(u) itself grows.
inline double strong_singular_trace(const DiscreteField& field, double gamma1,
                                    double k, double p) {
  if (!(gamma1 > 1.0))
    throw RegimeError("strong_singular_trace: applies only to gamma1 > 1");
  if (!(k > 0.0)) throw std::invalid_argument("strong_singular_trace: k > 0");
  const double pw = trace_power(gamma1, p);
  const auto& mesh = *field.mesh;
  double acc = 0.0;
  for (std::size_t i = 0; i < mesh.cells(); ++i) {
    const double wa = std::pow(std::min(std::max(field.u[i], 0.0), k), pw);
    const double wb = std::pow(std::min(std::max(field.u[i + 1], 0.0), k), pw);
    const double g = (wb - wa) / (mesh.node[i + 1] - mesh.node[i]);
    acc += std::pow(std::abs(g), p) * mesh.cell_volume(i);
  }
  return acc;
}

}  // namespace singlab
