#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dmrisk/kusuoka.hpp"
#include "support/oracles.hpp"

using namespace dmrisk;

namespace {

RandomVariable rv(std::vector<double> v) {
  const std::size_t n = v.size();
  return RandomVariable(ProbSpace::uniform(n), std::move(v));
}

// Direct quadrature of int_0^1 sigma(a)^q da on a fine midpoint grid.
double constraint_quadrature(const MixingMeasure& mu, double q, int n) {
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a = (k + 0.5) / n;
    double s = 0.0;
    for (std::size_t i = 0; i < mu.grid().size(); ++i) {
      if (mu.grid()[i] >= a) s += mu.weights()[i] / mu.grid()[i];
    }
    acc += std::pow(s, q) / n;
  }
  return acc;
}

}  // namespace

TEST(MixingMeasure, Validation) {
  EXPECT_NO_THROW(MixingMeasure::make({0.5, 1.0}, {0.5, 0.5}));
  EXPECT_THROW(MixingMeasure::make({0.5, 1.0}, {0.5, 0.6}), precondition_error);
  EXPECT_THROW(MixingMeasure::make({1.0, 0.5}, {0.5, 0.5}), precondition_error);
  EXPECT_THROW(MixingMeasure::make({0.0, 1.0}, {0.5, 0.5}), precondition_error);
  EXPECT_THROW(MixingMeasure::make({0.5, 1.0}, {1.5, -0.5}), precondition_error);
  EXPECT_THROW(MixingMeasure::make({}, {}), precondition_error);
}

TEST(MixingMeasure, IntegrateAvar) {
  const auto x = rv({-1, 1});
  EXPECT_NEAR(MixingMeasure::dirac(0.5).integrate_avar(x), 1.0, 1e-15);
  EXPECT_NEAR(MixingMeasure::dirac(1.0).integrate_avar(x), 0.0, 1e-15);
  EXPECT_NEAR(MixingMeasure::make({0.5, 1.0}, {0.5, 0.5}).integrate_avar(x), 0.5, 1e-15);
}

TEST(KusuokaConstraint, Examples) {
  EXPECT_NEAR(kusuoka_constraint(MixingMeasure::dirac(1.0), 2.0), 1.0, 1e-15);
  EXPECT_NEAR(kusuoka_constraint(MixingMeasure::dirac(0.5), 2.0), 2.0, 1e-15);
  EXPECT_NEAR(kusuoka_constraint(MixingMeasure::make({0.5, 1.0}, {0.5, 0.5}), 2.0), 1.25, 1e-15);
}

TEST(KusuokaConstraint, MatchesQuadrature) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    // levels on a 1/8 lattice so midpoint quadrature is exact
    std::vector<double> grid = {0.125, 0.25, 0.5, 0.625, 1.0};
    std::vector<double> w(grid.size());
    double s = 0.0;
    for (double& v : w) s += (v = u(rng));
    for (double& v : w) v /= s;
    const auto mu = MixingMeasure::make(grid, w);
    const double q = 1.0 + 3.0 * u(rng);
    EXPECT_NEAR(kusuoka_constraint(mu, q), constraint_quadrature(mu, q, 8), 1e-12);
  }
}

TEST(GeometricGrid, Shape) {
  const auto g = geometric_grid(8, 64);
  ASSERT_EQ(g.size(), 64u);
  EXPECT_NEAR(g.front(), 1.0 / 32.0, 1e-15);
  EXPECT_EQ(g.back(), 1.0);
  const double r = g[1] / g[0];
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], r, 1e-12);
  EXPECT_THROW(geometric_grid(8, 1), precondition_error);
}

TEST(KusuokaValue, Examples) {
  const auto r = kusuoka_value(rv({-1, 1}), 2.0, 2.0, 256);
  EXPECT_NEAR(r.value, 1.0, 1e-9);
  EXPECT_NEAR(r.mu_star.integrate_avar(rv({-1, 1})), r.value, 1e-12);
  EXPECT_LE(kusuoka_constraint(r.mu_star, 2.0), 4.0 + 1e-9);

  const auto onhalf = kusuoka_value_on_grid(rv({-1, 1}), 2.0, 2.0, {0.25, 0.5, 1.0});
  EXPECT_NEAR(onhalf.value, 1.0, 1e-12);

  for (std::size_t m : {2u, 16u, 256u}) {
    EXPECT_NEAR(kusuoka_value(rv({0.7, 0.7, 0.7}), 2.0, 3.0, m).value, -0.7, 1e-12);
  }
  EXPECT_THROW(kusuoka_value(rv({1, 2}), 1.0, 2.0, 16), precondition_error);
  EXPECT_THROW(kusuoka_value_on_grid(rv({1, 2}), 2.0, 2.0, {0.25, 0.5}), precondition_error);
}

TEST(KusuokaValue, SandwichAndRefinement) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    const double c = std::array{1.5, 2.0, 4.0}[trial % 3];
    const double p = std::array{1.5, 2.0, 3.0}[(trial / 3) % 3];
    auto s = oracle::random_space(rng, oracle::random_size(rng, 1, 12), trial % 2 == 0);
    const auto x = oracle::random_variable(rng, s);
    const double primal = higher_order_T(x, c, p);
    const double g64 = kusuoka_value_on_grid(x, c, p, geometric_grid(x.size(), 65)).value;
    const double g256 = kusuoka_value_on_grid(x, c, p, geometric_grid(x.size(), 257)).value;
    EXPECT_LE(g64, g256 + 1e-12);
    EXPECT_LE(g256, primal + 1e-6);
    const auto full = kusuoka_value(x, c, p, 256);
    EXPECT_LE(full.value, primal + 1e-6);
    EXPECT_GE(full.value, primal - 1e-3);
    EXPECT_GE(full.value, g256 - 1e-12);
    EXPECT_LE(kusuoka_constraint(full.mu_star, conjugate_exponent(p)),
              std::pow(c, conjugate_exponent(p)) * (1.0 + 1e-9));
  }
}

TEST(KusuokaValue, BreakpointGridIsExact) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    auto s = oracle::random_space(rng, oracle::random_size(rng, 1, 12), trial % 2 == 0);
    const auto x = oracle::random_variable(rng, s);
    EXPECT_NEAR(kusuoka_value(x, 2.0, 2.0, 8).value, oracle::higher_order_grid(x, 2.0, 2.0), 1e-7);
  }
}

TEST(KusuokaValue, SubgradientAgreesOnSmallGrids) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 6; ++trial) {
    auto s = ProbSpace::uniform(oracle::random_size(rng, 2, 6));
    const auto x = oracle::random_variable(rng, s);
    const auto grid = kusuoka_grid(x, 16);
    const auto exact = kusuoka_value_on_grid(x, 2.0, 2.0, grid);
    const auto sg = kusuoka_value_subgradient(x, 2.0, 2.0, grid, 5000);
    EXPECT_LE(sg.value, exact.value + 1e-9);
    EXPECT_NEAR(sg.value, exact.value, 5e-3);
    EXPECT_LE(kusuoka_constraint(sg.mu_star, 2.0), 4.0 * (1.0 + 1e-9));
  }
}
