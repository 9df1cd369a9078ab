#pragma once

/// Closed-form thresholds and regularity exponents for the degenerate
/// singular problem, plus a regime classifier that aggregates them into a
/// single report for a parameter set.
///
/// Conventions: N is the (real-valued) spatial dimension, p the operator
/// exponent (1 < p < N), theta the coercivity degeneracy rate, gamma1 /
/// gamma2 the blow-up / decay rates of the lower-order factor h, and m the
/// Lebesgue index of the datum f.

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "singlab/scalar_functions.hpp"

namespace singlab {

/// Parameters outside a result's proven range.
class RegimeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct ParameterSet {
  double dim_n = 3.0;
  double p = 2.0;
  double theta = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double m = 1.0;

  void validate() const {
    if (!(p > 1.0) || !(p < dim_n))
      throw std::invalid_argument("ParameterSet: need 1 < p < dim_n");
    if (theta < 0.0 || gamma1 < 0.0 || gamma2 < 0.0)
      throw std::invalid_argument("ParameterSet: theta, gamma1, gamma2 must be >= 0");
    if (m < 1.0) throw std::invalid_argument("ParameterSet: m must be >= 1");
  }
};

/// Existence holds for 0 <= theta <= 1 + gamma2/(p-1) (closed interval).
inline double existence_threshold(double p, double gamma2) {
  if (!(p > 1.0)) throw std::invalid_argument("existence_threshold: p must exceed 1");
  if (gamma2 < 0.0)
    throw std::invalid_argument("existence_threshold: gamma2 must be >= 0");
  return 1.0 + gamma2 / (p - 1.0);
}

/// Weak-tail case applies for max(0,(gamma2-1)/(p-1)) <= theta < threshold.
inline double weak_tail_lower(double p, double gamma2) {
  return std::max(0.0, (gamma2 - 1.0) / (p - 1.0));
}

struct MarcinkiewiczPair {
  double t;  // tail exponent of the solution
  double r;  // tail exponent of the gradient
};

/// Tail exponents for merely integrable data (m = 1).
inline MarcinkiewiczPair marcinkiewicz_exponents(double N, double p, double theta,
                                                 double gamma2) {
  if (!(p > 1.0 && p < N))
    throw std::invalid_argument("marcinkiewicz_exponents: need 1 < p < N");
  const double lo = weak_tail_lower(p, gamma2);
  const double hi = existence_threshold(p, gamma2);
  if (theta < lo && !nearly_equal(theta, lo))
    throw RegimeError(
        "marcinkiewicz_exponents: theta below the weak-tail range; the solution "
        "has finite energy there (gamma2 >= 1, theta <= (gamma2-1)/(p-1))");
  if (theta > hi || nearly_equal(theta, hi))
    throw RegimeError("marcinkiewicz_exponents: theta at or beyond the critical "
                      "degeneracy; no tail exponent is available");
  const double num = N * ((p - 1.0) * (1.0 - theta) + gamma2);
  return {num / (N - p), num / (N - theta * (p - 1.0) - 1.0 + gamma2)};
}

struct LebesgueRegularity {
  std::optional<double> sol_exp;   // u^sol_exp integrable
  std::optional<double> grad_exp;  // |grad u|^grad_exp integrable
  bool finite_energy = false;
  bool bounded = false;
  bool every_lq = false;  // critical case: every finite Lebesgue power
};

/// Minimal Lebesgue index granting finite energy for the given regime.
inline double finite_energy_min_m(double N, double p, double theta, double gamma2) {
  const double pstar = N * p / (N - p);
  const double denom = pstar - theta * (p - 1.0) - 1.0 + gamma2;
  if (!(denom > 0.0))
    throw RegimeError("finite_energy_min_m: degeneracy too strong for finite energy "
                      "at any Lebesgue index below N/p");
  return std::max(pstar / denom, 1.0);
}

/// Lebesgue-scale regularity of the solution and its gradient for datum in
/// L^m. Exponents are produced for 1 < m < N/p below the critical
/// degeneracy; flags cover the finite-energy, bounded and critical regimes.
inline LebesgueRegularity lebesgue_regularity(double N, double p, double theta,
                                              double gamma2, double m) {
  if (!(p > 1.0 && p < N))
    throw std::invalid_argument("lebesgue_regularity: need 1 < p < N");
  if (m < 1.0) throw std::invalid_argument("lebesgue_regularity: m must be >= 1");
  const double hi = existence_threshold(p, gamma2);
  const bool critical = nearly_equal(theta, hi);
  if (theta > hi && !critical)
    throw RegimeError("lebesgue_regularity: theta beyond the existence threshold");

  LebesgueRegularity out;
  const double n_over_p = N / p;
  out.bounded = m > n_over_p && !nearly_equal(m, n_over_p);
  if (critical) {
    out.every_lq = m > n_over_p || nearly_equal(m, n_over_p);
    out.finite_energy = out.every_lq;
    return out;
  }
  const double me = finite_energy_min_m(N, p, theta, gamma2);
  out.finite_energy = m > me || nearly_equal(m, me);
  if (m < n_over_p && !nearly_equal(m, n_over_p)) {
    if (m > 1.0 && !nearly_equal(m, 1.0)) {
      const double num = N * m * ((p - 1.0) * (1.0 - theta) + gamma2);
      out.sol_exp = num / (N - m * p);
      if (!out.finite_energy)
        out.grad_exp = num / (N - m * (theta * (p - 1.0) + 1.0 - gamma2));
    } else if (nearly_equal(m, 1.0) && theta <= weak_tail_lower(p, gamma2)) {
      out.finite_energy = true;  // gamma2 >= 1 with mild degeneracy
    }
  }
  return out;
}

/// Datum index above which at most one entropy solution exists; equals 1
/// exactly when theta <= gamma2/(p-1).
inline double uniqueness_min_m(double N, double p, double theta, double gamma2) {
  if (!(p > 1.0 && p < N))
    throw std::invalid_argument("uniqueness_min_m: need 1 < p < N");
  const double hi = existence_threshold(p, gamma2);
  if (theta > hi && !nearly_equal(theta, hi))
    throw RegimeError("uniqueness_min_m: theta beyond the existence threshold");
  const double denom = (N - p) * (gamma2 - theta * (p - 1.0)) + N * (p - 1.0);
  if (!(denom > 0.0))
    throw std::logic_error("uniqueness_min_m: denominator must stay positive "
                           "under the admissible range");
  return std::max(N * (p - 1.0) / denom, 1.0);
}

struct DistributionalThreshold {
  double min_m;
  bool strict;  // the bound is strict (m > min_m) at one exceptional theta
};

/// Datum index making an entropy solution distributional. The bound is
/// strict exactly at theta = 1/(N-p+1) + gamma2/(p-1).
inline DistributionalThreshold distributional_min_m(double N, double p, double theta,
                                                    double gamma2) {
  if (!(p > 1.0 && p < N))
    throw std::invalid_argument("distributional_min_m: need 1 < p < N");
  const double hi = existence_threshold(p, gamma2);
  if (theta > hi && !nearly_equal(theta, hi))
    throw RegimeError("distributional_min_m: theta beyond the existence threshold");
  const double denom = (N * (1.0 - theta) + 1.0 + theta * (p - 1.0)) * (p - 1.0) +
                       gamma2 * (N - p + 1.0);
  const double knee = 1.0 / (N - p + 1.0) + gamma2 / (p - 1.0);
  return {std::max(N * (p - 1.0) / denom, 1.0), nearly_equal(theta, knee)};
}

/// Finite-energy cutoff for the pure-power singular model: solutions have
/// finite energy if and only if the singularity rate is below 2 + 1/(p-1).
inline double finite_energy_gamma_threshold(double p) {
  if (!(p > 1.0))
    throw std::invalid_argument("finite_energy_gamma_threshold: p must exceed 1");
  return 2.0 + 1.0 / (p - 1.0);
}

struct RadialExponents {
  double alpha;        // u = r^alpha - 1
  double sol_tail;     // tail exponent of u
  double grad_tail;    // tail exponent of |grad u|
  bool w11_ok;         // gradient integrable
  double f_sup_m;      // supremum of admissible Lebesgue indices for f
  bool bounded_case;   // alpha >= 0: the profile stays bounded, no tails
};

/// Exponents of the exact radial family (p = 2): u = r^alpha - 1 with
/// alpha = (2 + eps - N)/(1 - theta + gamma2) on the unit ball.
inline RadialExponents radial_exponents(double N, double theta, double gamma2,
                                        double eps) {
  if (!(N >= 3.0)) throw std::invalid_argument("radial_exponents: need N >= 3");
  if (!(eps > 0.0)) throw std::invalid_argument("radial_exponents: need eps > 0");
  const double denom = 1.0 - theta + gamma2;
  if (nearly_equal(denom, 0.0))
    throw RegimeError("radial_exponents: critical degeneracy 1 - theta + gamma2 = 0; "
                      "the profile loses every weak-tail exponent");
  RadialExponents out{};
  out.alpha = (2.0 + eps - N) / denom;
  out.f_sup_m = N / (N - eps);
  out.w11_ok = theta < (1.0 + eps) / (N - 1.0) + gamma2;
  if (out.alpha >= 0.0) {
    out.bounded_case = true;
    out.sol_tail = std::numeric_limits<double>::infinity();
    out.grad_tail = std::numeric_limits<double>::infinity();
    return out;
  }
  out.bounded_case = false;
  out.sol_tail = N / std::abs(out.alpha);
  out.grad_tail = N / (1.0 - out.alpha);
  return out;
}

// ---------------------------------------------------------------------------
// Regime classification
// ---------------------------------------------------------------------------

struct RegimeReport {
  double theta_max = 0.0;
  bool existence_ok = false;
  std::optional<double> marc_t;
  std::optional<double> marc_r;
  std::optional<double> sol_lebesgue_exp;
  std::optional<double> grad_lebesgue_exp;
  bool finite_energy = false;
  bool bounded = false;
  bool every_lq = false;
  std::optional<double> uniqueness_min_m;
  std::optional<double> distributional_min_m;
  bool distributional_strict = false;
  std::vector<std::string> notes;
};

/// Evaluate every prediction that applies to `ps`; out-of-range results
/// become notes instead of failures.
inline RegimeReport classify_regime(const ParameterSet& ps) {
  ps.validate();
  RegimeReport rep;
  const double N = ps.dim_n, p = ps.p, theta = ps.theta, g2 = ps.gamma2, m = ps.m;

  rep.theta_max = existence_threshold(p, g2);
  rep.existence_ok = theta < rep.theta_max || nearly_equal(theta, rep.theta_max);
  if (!rep.existence_ok)
    rep.notes.push_back("degeneracy beyond the existence threshold: solutions can "
                        "fail to exist for large data");
  if (ps.gamma1 > 1.0)
    rep.notes.push_back("strongly singular lower-order term (gamma1 > 1): only "
                        "local energies are controlled; no weak-tail prediction");

  const bool m_is_one = nearly_equal(m, 1.0);
  if (rep.existence_ok && ps.gamma1 <= 1.0) {
    const double lo = weak_tail_lower(p, g2);
    if (m_is_one) {
      const bool in_tail_range =
          (theta > lo || nearly_equal(theta, lo)) && theta < rep.theta_max &&
          !nearly_equal(theta, rep.theta_max);
      if (in_tail_range) {
        const auto mp = marcinkiewicz_exponents(N, p, theta, g2);
        rep.marc_t = mp.t;
        rep.marc_r = mp.r;
        if (nearly_equal(theta, lo) && lo > 0.0)
          rep.notes.push_back("boundary overlap: both the finite-energy case and "
                              "the weak-tail case apply at this theta");
      }
      if (theta < lo || nearly_equal(theta, lo)) {
        rep.finite_energy = true;
        rep.notes.push_back("finite energy from the decay of h (gamma2 >= 1)");
      }
      if (nearly_equal(theta, rep.theta_max))
        rep.notes.push_back("critical degeneracy with integrable datum: no "
                            "weak-tail prediction");
    } else {
      try {
        const auto lr = lebesgue_regularity(N, p, theta, g2, m);
        rep.sol_lebesgue_exp = lr.sol_exp;
        rep.grad_lebesgue_exp = lr.grad_exp;
        rep.finite_energy = lr.finite_energy;
        rep.bounded = lr.bounded;
        rep.every_lq = lr.every_lq;
        if (!lr.sol_exp && !lr.bounded && !lr.every_lq && !lr.finite_energy)
          rep.notes.push_back("no prediction at this Lebesgue index");
        if (nearly_equal(m, N / p) && !nearly_equal(theta, rep.theta_max))
          rep.notes.push_back("borderline index m = N/p below the critical "
                              "degeneracy: no prediction");
      } catch (const RegimeError& e) {
        rep.notes.push_back(e.what());
      }
    }
    try {
      // Uniqueness additionally needs h decreasing and f > 0 a.e.; recorded as
      // a note because the parameters alone cannot certify either.
      rep.uniqueness_min_m = uniqueness_min_m(N, p, theta, g2);
      rep.notes.push_back("uniqueness threshold assumes decreasing h and "
                          "positive datum");
    } catch (const RegimeError& e) {
      rep.notes.push_back(e.what());
    }
    try {
      const auto d = distributional_min_m(N, p, theta, g2);
      rep.distributional_min_m = d.min_m;
      rep.distributional_strict = d.strict;
    } catch (const RegimeError& e) {
      rep.notes.push_back(e.what());
    }
  }
  return rep;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Flat key=value serialization, one entry per line.
inline std::string serialize(const RegimeReport& rep) {
  std::ostringstream os;
  auto put = [&os](const char* key, const std::string& v) {
    os << key << "=" << v << "\n";
  };
  auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("none");
  };
  put("theta_max", format_double(rep.theta_max));
  put("existence_ok", rep.existence_ok ? "true" : "false");
  put("marc_t", opt(rep.marc_t));
  put("marc_r", opt(rep.marc_r));
  put("sol_lebesgue_exp", opt(rep.sol_lebesgue_exp));
  put("grad_lebesgue_exp", opt(rep.grad_lebesgue_exp));
  put("finite_energy", rep.finite_energy ? "true" : "false");
  put("bounded", rep.bounded ? "true" : "false");
  put("every_lq", rep.every_lq ? "true" : "false");
  put("uniqueness_min_m", opt(rep.uniqueness_min_m));
  put("distributional_min_m", opt(rep.distributional_min_m));
  put("distributional_strict", rep.distributional_strict ? "true" : "false");
  for (std::size_t i = 0; i < rep.notes.size(); ++i)
    os << "note." << i << "=" << rep.notes[i] << "\n";
  return os.str();
}

}  // namespace singlab
