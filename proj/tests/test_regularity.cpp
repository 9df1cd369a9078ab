/// Regularity measurements against closed-form oracles on the exact radial
/// instance (distribution functions, tail fits, truncated energies) plus
/// the entropy residual, the logarithmic decay bound, boundedness checks
/// and the strongly singular trace energy.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "singlab/experiment.hpp"
#include "singlab/regularity.hpp"

using namespace singlab;

namespace {

std::shared_ptr<const RadialMesh> make(std::size_t cells, double g = 2.0) {
  return std::make_shared<const RadialMesh>(detail::make_mesh(cells, g, 0.0, 3.0));
}

DiscreteField exact_field(std::size_t cells) {
  const auto sol = exact_radial_solution(3.0, 0.5, 0.5, 0.5);
  return sample_field(make(cells), [sol](double r) { return sol(r); });
}

constexpr double kBall = 4.0 * std::numbers::pi / 3.0;

}  // namespace

TEST_CASE("distribution function basics") {
  auto field = constant_field(make(64), 2.0);
  field.u.back() = 2.0;  // genuinely constant for this check
  CHECK(superlevel_measure(field, 1.0) == Catch::Approx(kBall));
  CHECK(superlevel_measure(field, 3.0) == 0.0);
  CHECK(superlevel_measure(field, 2.0) == 0.0);  // right-continuous at the plateau

  CHECK_THROWS_AS(distribution_function(field, {1.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(distribution_function(field, {-1.0}), std::invalid_argument);
}

TEST_CASE("distribution of the exact profile matches the closed form") {
  const auto field = exact_field(4096);
  for (double k : {1.0, 10.0, 100.0}) {
    const double expected = kBall * std::pow(1.0 + k, -6.0);
    CHECK(superlevel_measure(field, k) == Catch::Approx(expected).epsilon(1e-2));
  }
  const auto levels = geometric_levels(0.5, 500.0, 24);
  const auto mu = distribution_function(field, levels);
  for (std::size_t i = 1; i < mu.size(); ++i) CHECK(mu[i] <= mu[i - 1]);
  // total measure at vanishing level approaches the ball volume
  CHECK(superlevel_measure(field, 1e-9) == Catch::Approx(kBall).epsilon(1e-6));
}

TEST_CASE("gradient distribution") {
  // linear profile: a single gradient value carried by the whole ball
  auto mesh = make(64, 1.0);
  DiscreteField lin;
  lin.mesh = mesh;
  lin.u.resize(mesh->cells() + 1);
  for (std::size_t i = 0; i < lin.u.size(); ++i) lin.u[i] = 1.0 - mesh->node[i];
  const auto mu = gradient_distribution(lin, {0.5, 1.0, 2.0});
  CHECK(mu[0] == Catch::Approx(kBall));
  CHECK(mu[1] == 0.0);  // strict comparison: the atom sits at lambda = 1
  CHECK(mu[2] == 0.0);

  // exact profile: measure proportional to lambda^{-2}
  const auto field = exact_field(4096);
  const auto m = gradient_distribution(field, {4.0, 8.0, 16.0});
  CHECK(m[0] / m[1] == Catch::Approx(4.0).epsilon(2e-2));
  CHECK(m[1] / m[2] == Catch::Approx(4.0).epsilon(2e-2));
  for (std::size_t i = 1; i < m.size(); ++i) CHECK(m[i] <= m[i - 1]);
}

TEST_CASE("tail exponent fit on synthetic power law") {
  const auto levels = geometric_levels(1.0, 1e4, 40);
  std::vector<double> mu(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i)
    mu[i] = 7.0 * std::pow(levels[i], -3.0);
  FitWindow window{false, 0.0};
  const auto fit = fit_tail_exponent(levels, mu, window);
  CHECK(fit.exponent == Catch::Approx(3.0).epsilon(1e-12));
  CHECK(fit.r_squared == Catch::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(fit_tail_exponent({1.0, 2.0, 4.0}, {1.0, 0.5, 0.2}, window),
                  InsufficientData);
}

TEST_CASE("tail exponents of the exact instance") {
  const auto field = exact_field(4096);
  FitWindow window{true, resolution_floor(*field.mesh)};

  const auto slevels = geometric_levels(0.5, 0.75 * field.sup(), 48);
  const auto sfit =
      fit_tail_exponent(slevels, distribution_function(field, slevels), window);
  CHECK(sfit.exponent >= 5.7);
  CHECK(sfit.exponent <= 6.3);

  double gmax = 0.0;
  const auto& mesh = *field.mesh;
  for (std::size_t i = 0; i < mesh.cells(); ++i)
    gmax = std::max(gmax, std::abs((field.u[i + 1] - field.u[i]) /
                                   (mesh.node[i + 1] - mesh.node[i])));
  const auto glevels = geometric_levels(0.5, 0.75 * gmax, 48);
  const auto gfit =
      fit_tail_exponent(glevels, gradient_distribution(field, glevels), window);
  CHECK(gfit.exponent >= 1.9);
  CHECK(gfit.exponent <= 2.1);
}

TEST_CASE("truncated energy") {
  const auto field = exact_field(2048);
  // profile below the level: the truncation is inactive
  const double full = truncated_energy(field, 1e9, 2.0);
  CHECK(truncated_energy(field, 2.0 * field.sup(), 2.0) ==
        Catch::Approx(full).epsilon(1e-12));
  // non-decreasing in k
  double prev = 0.0;
  for (double k : geometric_levels(0.5, 200.0, 16)) {
    const double e = truncated_energy(field, k, 2.0);
    CHECK(e >= prev - 1e-12);
    prev = e;
  }
  // closed form for the exact profile: 2 pi log(1+k)
  for (double k : {3.0, 10.0, 100.0}) {
    const double expected = 2.0 * std::numbers::pi * std::log1p(k);
    CHECK(truncated_energy(field, k, 2.0) ==
          Catch::Approx(expected).epsilon(2e-2));
  }
  CHECK_THROWS_AS(truncated_energy(field, 0.0, 2.0), std::invalid_argument);
}

TEST_CASE("truncated-energy growth stays below the guaranteed test power") {
  // The guaranteed growth power is theta(p-1)+1-gamma2 = 1 for the exact
  // instance; the profile itself grows only logarithmically, so the fitted
  // rate must match the closed form and stay below the guarantee.
  const auto field = exact_field(2048);
  const auto kgrid = geometric_levels(4.0, 0.5 * field.sup(), 24);
  auto fit_slope = [&](auto energy_of) {
    double mx = 0.0, my = 0.0;
    std::vector<double> xs, ys;
    for (double k : kgrid) {
      xs.push_back(std::log(k));
      ys.push_back(std::log(energy_of(k)));
      mx += xs.back();
      my += ys.back();
    }
    mx /= xs.size();
    my /= ys.size();
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    return sxy / sxx;
  };
  const double measured =
      fit_slope([&](double k) { return truncated_energy(field, k, 2.0); });
  const double oracle = fit_slope(
      [](double k) { return 2.0 * std::numbers::pi * std::log1p(k); });
  CHECK(measured == Catch::Approx(oracle).epsilon(0.1));
  CHECK(measured <= 1.0 + 0.1);  // one-sided guarantee
}

TEST_CASE("auxiliary tail bound check") {
  auto rep = aux_check(exact_field(2048), 2.0);
  CHECK(rep.applicable);
  CHECK(rep.pass);
  CHECK(rep.eta < 0.5);  // logarithmic energy growth fits a near-zero power
  CHECK(rep.sol_fit.exponent >= rep.sol_bound * 0.9);
  CHECK(rep.grad_fit.exponent >= rep.grad_bound * 0.9);

  // p-harmonic-type profile: the bound is attained with near-equality
  auto mesh = make(2048);
  auto ph = sample_field(mesh, [](double r) { return std::pow(r, -1.0) - 1.0; });
  rep = aux_check(ph, 2.0);
  CHECK(rep.applicable);
  CHECK(rep.pass);
  CHECK(rep.eta == Catch::Approx(1.0).margin(0.1));
  CHECK(rep.sol_fit.exponent == Catch::Approx(rep.sol_bound).epsilon(0.1));
  CHECK(rep.grad_fit.exponent == Catch::Approx(rep.grad_bound).epsilon(0.1));

  // bounded field: degenerate
  rep = aux_check(constant_field(make(64), 2.0), 2.0);
  CHECK_FALSE(rep.applicable);
}

TEST_CASE("entropy residual on the manufactured solution") {
  const auto mc = manufactured_solution(3.0);
  auto [field, diag] = solve_continuation(mc.spec, geometric_schedule(16, 256),
                                          zero_field(make(512, 1.0)));
  // phi = 0 with k beyond sup u: the discrete energy balance
  const auto phi0 = make_test_function(field, TestFunctionKind::Zero);
  const auto er = entropy_residual(field, mc.spec, phi0, 2.0 * field.sup());
  CHECK(std::abs(er.residual) <= 1e-8 * er.scale);
  // the inequality holds for the built-in family at several levels
  for (double k : {0.1, 1.0, 10.0}) {
    for (auto kind : {TestFunctionKind::ScaledTruncation, TestFunctionKind::Bump}) {
      const auto phi = make_test_function(field, kind,
                                          kind == TestFunctionKind::Bump ? 1.0 : 0.5,
                                          1.0);
      const auto r = entropy_residual(field, mc.spec, phi, k);
      CHECK(r.residual <= 1e-6 * r.scale);
    }
  }

  std::vector<double> bad(field.u.size(), 1.0);  // nonzero on the boundary
  CHECK_THROWS_AS(entropy_residual(field, mc.spec, bad, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(entropy_residual(field, mc.spec, phi0, 0.0), std::invalid_argument);
}

TEST_CASE("entropy residual on the exact instance stays one-sided") {
  const auto spec = exact_radial_problem(3.0, 0.5, 0.5, 0.5);
  auto [field, diag] = solve_continuation(spec, geometric_schedule(16, 1 << 16),
                                          zero_field(make(1024)));
  for (double k : {0.1, 1.0, 10.0}) {
    for (auto kind : {TestFunctionKind::Zero, TestFunctionKind::ScaledTruncation,
                      TestFunctionKind::Bump}) {
      const auto phi = make_test_function(field, kind,
                                          kind == TestFunctionKind::Bump ? 1.0 : 0.5,
                                          1.0);
      const auto r = entropy_residual(field, spec, phi, k);
      CHECK(r.residual <= 1e-6 * r.scale);
    }
  }
}

TEST_CASE("logarithmic superlevel decay") {
  const auto spec = exact_radial_problem(3.0, 0.5, 0.5, 0.5);
  auto mesh = make(512);
  // walk the full schedule and keep the last three continuation fields
  std::vector<DiscreteField> fields;
  DiscreteField warm = zero_field(mesh);
  for (std::int64_t n : geometric_schedule(16, std::int64_t{1} << 24)) {
    auto [f, trace] = solve_regularized(spec, n, warm);
    warm = f;
    fields.push_back(f);
    if (fields.size() > 3) fields.erase(fields.begin());
  }
  const auto rep = log_decay_check(fields, 2.0);
  CHECK(rep.exponent == Catch::Approx(3.0));
  CHECK(rep.pass);
  for (double c : rep.c_fit) CHECK(std::isfinite(c));

  // closed-form sanity: the profile's power-law decay dominates the bound
  for (double k : geometric_levels(2.0, 1e3, 12))
    CHECK(std::pow(1.0 + k, -6.0) * std::pow(std::log1p(k), 3.0) <= 0.5);

  // bounded fields satisfy the bound trivially
  std::vector<DiscreteField> flat(3, constant_field(make(64), 1.0));
  CHECK(log_decay_check(flat, 2.0).pass);
  CHECK_THROWS_AS(log_decay_check({fields[0], fields[1]}, 2.0), InsufficientData);
}

TEST_CASE("boundedness checks") {
  // h vanishing at s-bar caps the solution there even for huge degeneracy
  ProblemSpec spec;
  spec.dim_n = 3.0;
  spec.theta = 3.0;
  spec.h = HModel{0.5, 0.0, 1.0, 2.0};
  spec.source = SourceSpec{5.0, 0.5};
  auto [field, diag] = solve_continuation(spec, geometric_schedule(16, 1 << 14),
                                          zero_field(make(256)));
  const auto rep = bound_checks(field, spec, 1.0);
  CHECK(rep.regime == "h-zero");
  CHECK(rep.pass);
  CHECK(rep.sup_u <= 2.0 + 1e-8);

  // zero datum: the zero field
  ProblemSpec empty = spec;
  empty.source.amplitude = 0.0;
  auto [zf, zd] = solve_continuation(empty, geometric_schedule(16, 64),
                                     zero_field(make(64)));
  CHECK(bound_checks(zf, empty, 1.0).sup_u == 0.0);

  // bounded regime m > N/p reports a finite supremum
  ProblemSpec reg;
  reg.dim_n = 3.0;
  reg.theta = 0.5;
  reg.h = HModel{0.0, 0.5, 1.0};
  reg.source = SourceSpec{1.0, 0.5};
  auto [bf, bd] = solve_continuation(reg, geometric_schedule(16, 1 << 12),
                                     zero_field(make(256)));
  const auto brep = bound_checks(bf, reg, 3.0);
  CHECK(brep.regime == "integrable-datum");
  CHECK(brep.pass);

  // no claim applies
  CHECK_THROWS_AS(bound_checks(bf, reg, 1.0), RegimeError);
}

TEST_CASE("strongly singular trace energy") {
  CHECK(trace_power(2.0, 2.0) == Catch::Approx(1.5));
  CHECK(trace_power(1.0 + 1e-12, 2.0) == Catch::Approx(1.0).epsilon(1e-9));

  ProblemSpec spec;
  spec.dim_n = 3.0;
  spec.theta = 0.0;
  spec.h = HModel{2.0, 2.0, 1.0};  // h(s) = s^{-2}
  spec.source = SourceSpec{1.0, 0.0};
  const auto schedule = geometric_schedule(16, 1 << 18);
  auto [coarse, dc] = solve_continuation(spec, schedule, zero_field(make(256, 1.0)));
  auto [fine, df] = solve_continuation(spec, schedule, zero_field(make(1024, 1.0)));
  const double ec = strong_singular_trace(coarse, 2.0, 1.0, 2.0);
  const double ef = strong_singular_trace(fine, 2.0, 1.0, 2.0);
  CHECK(std::abs(ef / ec - 1.0) <= 0.1);

  CHECK_THROWS_AS(strong_singular_trace(fine, 0.5, 1.0, 2.0), RegimeError);
  CHECK_THROWS_AS(strong_singular_trace(fine, 2.0, 0.0, 2.0), std::invalid_argument);
}

TEST_CASE("solved-field tails stay above the guaranteed pair") {
  // Weak-tail guarantee (one-sided, 10% slack) on the continuation output.
  const auto spec = exact_radial_problem(3.0, 0.5, 0.5, 0.5);
  auto [field, diag] = solve_continuation(spec, geometric_schedule(16, 1 << 16),
                                          zero_field(make(1024)));
  const auto mp = marcinkiewicz_exponents(3.0, 2.0, 0.5, 0.5);
  FitWindow window{true, resolution_floor(*field.mesh)};
  const auto slevels = geometric_levels(0.3, 0.75 * field.sup(), 48);
  const auto sfit =
      fit_tail_exponent(slevels, distribution_function(field, slevels), window);
  CHECK(sfit.exponent >= mp.t * 0.9);

  double gmax = 0.0;
  const auto& mesh = *field.mesh;
  for (std::size_t i = 0; i < mesh.cells(); ++i)
    gmax = std::max(gmax, std::abs((field.u[i + 1] - field.u[i]) /
                                   (mesh.node[i + 1] - mesh.node[i])));
  const auto glevels = geometric_levels(0.3, 0.75 * gmax, 48);
  const auto gfit =
      fit_tail_exponent(glevels, gradient_distribution(field, glevels), window);
  CHECK(gfit.exponent >= mp.r * 0.9);
}
