#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "seqstop/analytics.hpp"
#include "seqstop/cost_models.hpp"
#include "seqstop/parallel.hpp"
#include "seqstop/rng.hpp"

using namespace seqstop;

namespace {

double zeta_constant_closed_form(double c, double delta, double x) {
  return (2.0 * c / delta) * (x + std::expm1(-delta * x) / delta);
}

}  // namespace

TEST_CASE("zeta reproduces the constant-cost closed form", "[cost]") {
  const CostFunction cost = CostFunction::constant(1.7);
  for (double delta : {0.4, 1.0, 2.2, 3.5}) {
    for (double x : {-1.2, -0.6, -0.1, 0.2, 0.8, 1.5}) {
      const double expect = zeta_constant_closed_form(1.7, delta, x);
      CHECK(zeta(cost, delta, x) == Catch::Approx(expect).epsilon(1e-8));
    }
  }
  CHECK(zeta(cost, 1.0, 0.0) == 0.0);
  CHECK_THROWS_AS(zeta(cost, 0.0, 1.0), parameter_error);
  CHECK_THROWS_AS(zeta(cost, 1.0, std::nan("")), parameter_error);
}

TEST_CASE("zeta satisfies its defining ODE", "[cost]") {
  // (1/2) zeta'' + (delta/2) zeta' = c, checked by central differences
  const CostFunction cost = CostFunction::polynomial_abs({1.0, 0.0, 1.0});  // 1 + z^2
  const double delta = 1.8;
  const double h = 1e-3;
  for (int k = 0; k < 20; ++k) {
    const double x = -1.5 + 3.0 * (k + 0.5) / 20.0;
    const double zm = zeta(cost, delta, x - h, 1e-10);
    const double z0 = zeta(cost, delta, x, 1e-10);
    const double zp = zeta(cost, delta, x + h, 1e-10);
    const double d1 = (zp - zm) / (2.0 * h);
    const double d2 = (zp - 2.0 * z0 + zm) / (h * h);
    const double cx = cost(x);
    CHECK(std::fabs(0.5 * d2 + 0.5 * delta * d1 - cx) < 1e-4 * cx);
  }
}

TEST_CASE("general objective reduces to the closed form for constant cost", "[cost]") {
  const double c = 1.3, s1 = 1.4, s0 = 0.9;
  const CostFunction cost = CostFunction::constant(c);
  const DesignParams params(c, s1, s0);
  for (double g : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    for (double d : {0.5, 1.2, 2.0, 3.0, 4.0}) {
      const double expect = regret_objective(params, g, d);
      CHECK(general_objective(cost, s1, s0, g, d) == Catch::Approx(expect).epsilon(1e-8));
    }
  }
  // the cost component alone matches the stopping-time formula term
  const double g = 0.7, d = 2.1;
  CHECK(expected_general_cost(cost, g, d) ==
        Catch::Approx(c * expected_stopping_time(g, d)).epsilon(1e-8));
}

TEST_CASE("general objective small-threshold limit", "[cost]") {
  const CostFunction cost = CostFunction::constant(1.0);
  const double d = 2.5;
  // gamma -> 0: cost terms vanish, alpha -> 1/2, objective -> (s1+s0) d / 4
  CHECK(general_objective(cost, 1.0, 1.0, 1e-5, d) == Catch::Approx(0.5 * d).epsilon(1e-4));
}

TEST_CASE("cost term is linear in the cost function", "[cost]") {
  const CostFunction one = CostFunction::polynomial_abs({0.5, 0.0, 0.7});
  const CostFunction two = CostFunction::polynomial_abs({1.0, 0.0, 1.4});
  const double g = 0.6, d = 1.9;
  CHECK(expected_general_cost(two, g, d) ==
        Catch::Approx(2.0 * expected_general_cost(one, g, d)).epsilon(1e-9));
  // doubling the cost doubles the cost term and leaves the decision term alone
  const double imp = general_objective(one, 1.0, 1.0, g, d) - expected_general_cost(one, g, d);
  const double imp2 = general_objective(two, 1.0, 1.0, g, d) - expected_general_cost(two, g, d);
  CHECK(imp == Catch::Approx(imp2).epsilon(1e-10));
}

TEST_CASE("general solve matches the analytic equilibrium for constant cost", "[cost]") {
  const double c = 1.0;
  const CostFunction cost = CostFunction::constant(c);
  const GeneralEquilibrium ge = solve_general_equilibrium(cost, 1.0, 1.0);
  const EquilibriumSolution eq = solve_equilibrium(DesignParams(c, 1.0, 1.0));
  CHECK(std::fabs(ge.gamma_star - eq.gamma_star) < 1e-5);
  CHECK(std::fabs(ge.delta_star - eq.delta_star) < 1e-5);
  CHECK(ge.value == Catch::Approx(eq.value).epsilon(1e-7));
  CHECK(ge.residual < 1e-6);
  CHECK(ge.multistart_spread < 1e-5);
}

TEST_CASE("costlier extremes shorten the experiment", "[cost]") {
  const double c0 = 1.0;
  const GeneralEquilibrium flat =
      solve_general_equilibrium(CostFunction::constant(c0), 1.0, 1.0);
  const GeneralEquilibrium steep =
      solve_general_equilibrium(CostFunction::polynomial_abs({c0, 0.0, c0}), 1.0, 1.0);
  CHECK(steep.gamma_star < flat.gamma_star);
}

TEST_CASE("scaling the cost function re-solves consistently", "[cost]") {
  const CostFunction base = CostFunction::polynomial_abs({1.0, 0.0, 0.5});
  const CostFunction scaled = CostFunction::polynomial_abs({3.0, 0.0, 1.5});
  const GeneralEquilibrium a = solve_general_equilibrium(base, 1.0, 1.0);
  const GeneralEquilibrium b = solve_general_equilibrium(scaled, 1.0, 1.0);
  CHECK(b.gamma_star < a.gamma_star);  // costlier sampling stops earlier
  // at the new saddle the cost component is exactly three times the base cost
  CHECK(expected_general_cost(scaled, b.gamma_star, b.delta_star) ==
        Catch::Approx(3.0 * expected_general_cost(base, b.gamma_star, b.delta_star))
            .epsilon(1e-8));
  // and the objective decomposes into decision term + cost term
  const double imp =
      general_objective(scaled, 1.0, 1.0, b.gamma_star, b.delta_star) -
      expected_general_cost(scaled, b.gamma_star, b.delta_star);
  CHECK(imp == Catch::Approx(b.delta_star * misid_prob(b.gamma_star, b.delta_star))
                   .epsilon(1e-7));
}

TEST_CASE("cost function construction guards", "[cost]") {
  CHECK_THROWS_AS(CostFunction([](double z) { return 1.0 + z; }, 0.5), config_error);
  CHECK_THROWS_AS(CostFunction([](double z) { return z * z; }, 0.5), config_error);  // dips below
  CHECK_THROWS_AS(CostFunction::constant(0.0), config_error);
  CHECK_THROWS_AS(CostFunction::polynomial_abs({}), config_error);
  CHECK_THROWS_AS(CostFunction::polynomial_abs({0.0, 1.0}), config_error);
  CHECK_THROWS_AS(CostFunction::polynomial_abs({1.0, -0.5}), config_error);
  CHECK_THROWS_AS(CostFunction::table({0.0, 1.0}, {1.0}), config_error);
  CHECK_THROWS_AS(CostFunction::table({0.5, 1.0}, {1.0, 2.0}), config_error);
  CHECK_THROWS_AS(CostFunction::table({0.0, 1.0}, {1.0, 0.0}), config_error);
  CHECK_NOTHROW(CostFunction::table({0.0, 0.5, 1.0, 4.0}, {1.0, 1.1, 1.6, 3.0}));
}

TEST_CASE("table interpolation is monotone between knots", "[cost]") {
  const CostFunction t = CostFunction::table({0.0, 0.5, 1.0, 2.0}, {1.0, 1.2, 2.0, 2.5});
  CHECK(t(0.0) == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(t(0.5) == Catch::Approx(1.2).epsilon(1e-14));
  CHECK(t(-0.5) == t(0.5));   // even in z
  CHECK(t(5.0) == Catch::Approx(2.5).epsilon(1e-14));  // constant beyond the last knot
  double prev = t(0.0);
  for (double z = 0.01; z <= 2.0; z += 0.01) {
    CHECK(t(z) >= prev - 1e-12);
    prev = t(z);
  }
}

TEST_CASE("monte carlo accumulated cost matches the zeta expression", "[cost][mc]") {
  // cost 1 + rho^2 along the path, threshold stopping; Euler with the
  // continuity-corrected barrier so the comparison needs no dt allowance
  const CostFunction cost = CostFunction::polynomial_abs({1.0, 0.0, 1.0});
  const double gamma = 0.6, delta = 2.0;
  const double dt = 2e-4;
  const double barrier = gamma - 0.5826 * std::sqrt(dt);
  const std::size_t reps = 30000;
  std::vector<double> total(reps);
  parallel_for(reps, 0, [&](std::size_t i) {
    RngStream rng = RngStream::for_replication(24601, i);
    double rho = 0.0, acc = 0.0;
    const double sdt = std::sqrt(dt);
    while (std::fabs(rho) < barrier) {
      acc += cost(rho) * dt;
      rho += 0.5 * delta * dt + sdt * rng.next_normal();
    }
    total[i] = acc;
  });
  double mean = 0.0;
  for (double v : total) mean += v;
  mean /= static_cast<double>(reps);
  double ss = 0.0;
  for (double v : total) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (reps - 1.0) / reps);
  const double expect = expected_general_cost(cost, gamma, delta);
  CHECK(std::fabs(mean - expect) <= 3.0 * se);
}
