#include <gtest/gtest.h>

#include <cmath>

#include "meandev/validate.hpp"

using namespace meandev;

namespace {

MarketModel jump_market() {
  return MarketModel(0.03, {0.09}, Matrix{{0.2}}, Matrix{{0.3}}, LevyMeasure(1, {{{0.1}, 2.0}}));
}

}  // namespace

TEST(Estimate, WithinBandsAndRoundingSlack) {
  EXPECT_TRUE((Estimate{1.0, 0.1, 1.25}).within());
  EXPECT_FALSE((Estimate{1.0, 0.1, 1.35}).within());
  EXPECT_TRUE((Estimate{1.0 + 1e-12, 0.0, 1.0}).within());
  EXPECT_FALSE((Estimate{1.0 + 1e-6, 0.0, 1.0}).within());
  EXPECT_NEAR((Estimate{1.0, 0.5, 2.0}).z(), -2.0, 1e-15);
}

TEST(Objective, ConstantPolicyMatchesClosedForm) {
  const auto m = jump_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  const auto p = Policy({0.0, 2.0, 5.0}, {{0.4}, {1.0}});
  MonteCarloOptions opts;
  opts.n_paths = 20000;
  const auto r = estimate_objective(m, g, 0.5, p, 2.0, opts);
  EXPECT_NEAR(r.mean.target, wealth_mean(m, p, 2.0, 0.0), 1e-12);
  EXPECT_NEAR(r.deviation.target, 2.0 * growth_factor(m, p, 0.0) * penalty_integral(m, g, p, 0.0), 1e-12);
  EXPECT_NEAR(r.objective.value, r.mean.value - 0.5 * r.deviation.value, 1e-12);
  EXPECT_TRUE(r.passed()) << r.mean.z() << " " << r.deviation.z() << " " << r.objective.z();
}

TEST(Objective, ReproducibleAcrossWorkers) {
  const auto m = jump_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  const auto p = Policy::constant(0.0, 3.0, {0.7});
  MonteCarloOptions opts;
  opts.n_paths = 3000;
  const auto a = estimate_objective(m, g, 0.2, p, 1.0, opts);
  opts.workers = 3;
  const auto b = estimate_objective(m, g, 0.2, p, 1.0, opts);
  EXPECT_EQ(a.mean.value, b.mean.value);
  EXPECT_EQ(a.deviation.value, b.deviation.value);
}

TEST(Perturbation, EquilibriumIsNotBeaten) {
  const auto m = jump_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  FixedPointOptions fp;
  fp.grid_size = 512;
  const auto sol = fixed_point(m, g, 0.1, 40.0, fp);
  MonteCarloOptions opts;
  opts.n_paths = 20000;
  const double t = 0.5 * (sol.t_star + 40.0);
  const auto report = perturbation_test(m, g, sol, t, 40.0 / 64.0, {{0.0}, {0.5}}, 1.0, opts);
  ASSERT_EQ(report.outcomes.size(), 2u);
  EXPECT_TRUE(report.passed());
  for (const auto& o : report.outcomes) {
    EXPECT_GT(o.exact_difference, 0.0);
    EXPECT_NEAR(o.ratio * report.h, o.difference, 1e-12);
  }
}

TEST(Perturbation, EquilibriumHeadGivesZeroDifference) {
  const auto m = jump_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  FixedPointOptions fp;
  fp.grid_size = 256;
  const auto sol = fixed_point(m, g, 0.1, 40.0, fp);
  MonteCarloOptions opts;
  opts.n_paths = 2000;
  const auto report = perturbation_test(m, g, sol, 30.0, 0.5, {{1.0}}, 1.0, opts);
  EXPECT_NEAR(report.outcomes[0].difference, 0.0, 1e-9);
  EXPECT_NEAR(report.outcomes[0].exact_difference, 0.0, 1e-9);
}
