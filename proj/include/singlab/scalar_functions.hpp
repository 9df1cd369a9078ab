#pragma once

/// Scalar building blocks shared by every other module: the truncation
/// family T_k / G_k / V_k, the model lower-order nonlinearity h and its
/// truncated regularization h_n, the coercivity change of variable Phi,
/// and the weight H used by the boundedness check.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace singlab {

inline constexpr double kLogBranchTol = 1e-10;  // switch to log antiderivative
inline constexpr double kBoundaryTol = 1e-12;   // regime-boundary comparisons

/// |a - b| within kBoundaryTol, scaled by magnitude.
inline bool nearly_equal(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= kBoundaryTol * scale;
}

// ---------------------------------------------------------------------------
// Truncations
// ---------------------------------------------------------------------------

/// T_k(s) = max(-k, min(s, k)).
inline double truncate(double k, double s) {
  if (!(k > 0.0)) throw std::invalid_argument("truncate: level k must be positive");
  return std::max(-k, std::min(s, k));
}

/// G_k(s) = (|s| - k)^+ sign(s); the part of s beyond the truncation level.
inline double excess(double k, double s) {
  if (!(k > 0.0)) throw std::invalid_argument("excess: level k must be positive");
  const double e = std::max(std::abs(s) - k, 0.0);
  return s >= 0.0 ? e : -e;
}

/// V_k(s): 1 on |s| <= k, linear ramp down to 0 across k < |s| < 2k, 0 beyond.
inline double plateau(double k, double s) {
  if (!(k > 0.0)) throw std::invalid_argument("plateau: level k must be positive");
  const double a = std::abs(s);
  if (a <= k) return 1.0;
  if (a >= 2.0 * k) return 0.0;
  return (2.0 * k - a) / k;
}

enum class TruncationKind { T, G, V };

inline double truncation_family(TruncationKind kind, double k, double s) {
  switch (kind) {
    case TruncationKind::T: return truncate(k, s);
    case TruncationKind::G: return excess(k, s);
    case TruncationKind::V: return plateau(k, s);
  }
  throw std::invalid_argument("truncation_family: unknown kind");
}

// ---------------------------------------------------------------------------
// Lower-order nonlinearity h
// ---------------------------------------------------------------------------

/// Model family for the lower-order factor h(s).
///
/// Base family      h(s) = scale * (1+s)^(gamma1-gamma2) * s^(-gamma1)
/// Zero variant     h(s) = scale * s^(-gamma1) * max(0, 1 - s/zero_point)
///
/// The base family blows up at rate gamma1 near 0 and decays at rate gamma2
/// near infinity; the zero variant vanishes identically beyond zero_point.
/// s1 < s2 are the conventional radii splitting the two asymptotic regimes.
struct HModel {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double scale = 1.0;
  std::optional<double> zero_point;  // set -> zero variant
  double s1 = 0.5;
  double s2 = 2.0;

  friend bool operator==(const HModel&, const HModel&) = default;

  void validate() const {
    if (gamma1 < 0.0 || gamma2 < 0.0)
      throw std::invalid_argument("HModel: gamma1, gamma2 must be nonnegative");
    if (!(scale > 0.0)) throw std::invalid_argument("HModel: scale must be positive");
    if (zero_point && !(*zero_point > 0.0))
      throw std::invalid_argument("HModel: zero_point must be positive");
    if (!(s1 > 0.0 && s2 > s1))
      throw std::invalid_argument("HModel: need 0 < s1 < s2");
  }

  /// The base family has log-slope -(gamma2 s + gamma1)/(s(1+s)), so it is
  /// strictly decreasing unless both rates vanish (constant h).
  bool decreasing() const { return zero_point.has_value() || gamma1 + gamma2 > 0.0; }
};

/// h(s) for s >= 0 as an extended real: +inf at s = 0 when gamma1 > 0.
inline double h_eval(const HModel& m, double s) {
  if (s < 0.0) throw std::invalid_argument("h_eval: s must be nonnegative");
  if (std::isinf(s)) {
    if (m.zero_point) return 0.0;
    return m.gamma2 > 0.0 ? 0.0 : m.scale;
  }
  if (m.zero_point) {
    const double cut = std::max(0.0, 1.0 - s / *m.zero_point);
    if (cut == 0.0) return 0.0;
    if (s == 0.0)
      return m.gamma1 > 0.0 ? std::numeric_limits<double>::infinity() : m.scale;
    return m.scale * std::pow(s, -m.gamma1) * cut;
  }
  if (s == 0.0)
    return m.gamma1 > 0.0 ? std::numeric_limits<double>::infinity() : m.scale;
  return m.scale * std::pow(1.0 + s, m.gamma1 - m.gamma2) * std::pow(s, -m.gamma1);
}

/// dh/ds on [0, inf); -inf at s = 0 when h blows up there. Used by the
/// Newton linearization (the truncated variant zeroes it under the cap).
inline double h_derivative(const HModel& m, double s) {
  if (s < 0.0) throw std::invalid_argument("h_derivative: s must be >= 0");
  if (s == 0.0 && m.gamma1 > 0.0) return -std::numeric_limits<double>::infinity();
  if (m.zero_point) {
    const double sb = *m.zero_point;
    if (s >= sb) return 0.0;
    const double base = m.scale * std::pow(s, -m.gamma1);
    return base * ((s > 0.0 ? -m.gamma1 / s * (1.0 - s / sb) : 0.0) - 1.0 / sb);
  }
  const double v = h_eval(m, s);
  return v * ((m.gamma1 - m.gamma2) / (1.0 + s) - (s > 0.0 ? m.gamma1 / s : 0.0));
}

/// h_n(s) = T_n(h(s)) for s >= 0; min(n, h(0)) for s < 0.
inline double h_truncated(const HModel& m, std::int64_t n, double s) {
  if (n < 1) throw std::invalid_argument("h_truncated: n must be >= 1");
  const double cap = static_cast<double>(n);
  if (s < 0.0) return std::min(cap, h_eval(m, 0.0));
  return std::min(cap, h_eval(m, s));
}

/// Derivative of h_n (zero where the cap is active).
inline double h_truncated_derivative(const HModel& m, std::int64_t n, double s) {
  if (s < 0.0) return 0.0;
  if (h_eval(m, s) >= static_cast<double>(n)) return 0.0;
  return h_derivative(m, s);
}

// ---------------------------------------------------------------------------
// Change of variable Phi and boundedness weight H
// ---------------------------------------------------------------------------

/// Phi(u) = integral_0^u (1+t)^(-theta) dt, the transform flattening the
/// degenerate coefficient into a coercive one.
inline double phi_forward(double theta, double u) {
  if (theta < 0.0) throw std::invalid_argument("phi_forward: theta must be >= 0");
  if (u < 0.0) throw std::invalid_argument("phi_forward: u must be >= 0");
  if (std::abs(1.0 - theta) < kLogBranchTol) return std::log1p(u);
  return std::expm1((1.0 - theta) * std::log1p(u)) / (1.0 - theta);
}

/// Exact inverse of phi_forward. For theta > 1 the range of Phi is bounded
/// by 1/(theta-1); values past it are rejected.
inline double phi_inverse(double theta, double v) {
  if (theta < 0.0) throw std::invalid_argument("phi_inverse: theta must be >= 0");
  if (v < 0.0) throw std::invalid_argument("phi_inverse: v must be >= 0");
  if (std::abs(1.0 - theta) < kLogBranchTol) return std::expm1(v);
  const double step = (1.0 - theta) * v;
  if (!(step > -1.0))
    throw std::invalid_argument("phi_inverse: value outside the range of Phi");
  return std::expm1(std::log1p(step) / (1.0 - theta));
}

/// d(Phi^-1)/dv = (1 + Phi^-1(v))^theta.
inline double phi_inverse_derivative(double theta, double v) {
  return std::pow(1.0 + phi_inverse(theta, v), theta);
}

/// H(s) = integral_0^s (1+t)^(-q) dt with q = theta - gamma2/(p-1), s >= 0.
inline double H_weight(double theta, double gamma2, double p, double s) {
  if (!(p > 1.0)) throw std::invalid_argument("H_weight: p must exceed 1");
  if (s < 0.0) throw std::invalid_argument("H_weight: s must be >= 0");
  const double q = theta - gamma2 / (p - 1.0);
  if (std::abs(1.0 - q) < kLogBranchTol) return std::log1p(s);
  return std::expm1((1.0 - q) * std::log1p(s)) / (1.0 - q);
}

/// H(s) -> inf as s -> inf exactly when theta <= 1 + gamma2/(p-1).
inline bool H_diverges(double theta, double gamma2, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("H_diverges: p must exceed 1");
  const double threshold = 1.0 + gamma2 / (p - 1.0);
  return theta <= threshold || nearly_equal(theta, threshold);
}

}  // namespace singlab
