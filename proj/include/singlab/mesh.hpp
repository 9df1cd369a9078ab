#pragma once

/// Graded radial meshes on [r_in, 1] and the exact power-law cell
/// quadratures the finite-volume discretization is built from.

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "singlab/scalar_functions.hpp"

namespace singlab {

/// Surface measure of the unit sphere in dimension N (real N via Gamma).
inline double unit_sphere_area(double dim_n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * dim_n) / std::tgamma(0.5 * dim_n);
}

/// integral_a^b r^e dr, with the log branch at e = -1.
inline double power_integral(double a, double b, double e) {
  if (std::abs(e + 1.0) < kLogBranchTol) return std::log(b) - std::log(a);
  return (std::pow(b, e + 1.0) - std::pow(a, e + 1.0)) / (e + 1.0);
}

/// Nodes r_i = r_in + (1 - r_in) (i/M)^g; g > 1 clusters them at the origin
/// where source and solution are singular.
struct RadialMesh {
  std::vector<double> node;  // r_0 < ... < r_M, r_M = 1
  double dim_n = 3.0;
  double grading = 1.0;
  double r_in = 0.0;

  std::size_t cells() const { return node.size() - 1; }

  /// Flux face between nodes i and i+1 (arithmetic midpoint).
  double face(std::size_t i) const { return 0.5 * (node[i] + node[i + 1]); }

  /// Control volume of unknown i: [cv_lo, cv_hi]. Node 0 owns a half cell
  /// starting at r_in; the Dirichlet node owns no control volume.
  double cv_lo(std::size_t i) const { return i == 0 ? node[0] : face(i - 1); }
  double cv_hi(std::size_t i) const { return face(i); }

  /// omega_{N-1} * integral_a^b r^{N-1} dr.
  double volume(double a, double b) const {
    return unit_sphere_area(dim_n) * power_integral(a, b, dim_n - 1.0);
  }

  double cell_volume(std::size_t i) const { return volume(node[i], node[i + 1]); }

  double domain_volume() const { return volume(node.front(), node.back()); }
};

namespace detail {

/// Mesh construction without the public cell-count floor (test hook).
inline RadialMesh make_mesh(std::size_t cells, double grading, double r_in,
                            double dim_n) {
  if (cells < 2) throw std::invalid_argument("make_mesh: need at least 2 cells");
  if (!(grading >= 1.0))
    throw std::invalid_argument("make_mesh: grading must be >= 1");
  if (!(r_in >= 0.0 && r_in < 1.0))
    throw std::invalid_argument("make_mesh: need 0 <= r_in < 1");
  RadialMesh mesh;
  mesh.dim_n = dim_n;
  mesh.grading = grading;
  mesh.r_in = r_in;
  mesh.node.resize(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(cells);
    mesh.node[i] = r_in + (1.0 - r_in) * std::pow(t, grading);
  }
  mesh.node.back() = 1.0;
  return mesh;
}

}  // namespace detail

inline RadialMesh build_mesh(std::size_t cells, double grading, double r_in,
                             double dim_n = 3.0) {
  if (cells < 8) throw std::invalid_argument("build_mesh: need at least 8 cells");
  return detail::make_mesh(cells, grading, r_in, dim_n);
}

}  // namespace singlab
