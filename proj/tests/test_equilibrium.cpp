#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "meandev/equilibrium.hpp"
#include "meandev/errors.hpp"

using namespace meandev;

namespace {

MarketModel benchmark_market() {
  return MarketModel(0.03, {0.09}, Matrix{{0.2}}, Matrix{{0.0}}, LevyMeasure(1));
}

MarketModel jump_market() {
  return MarketModel(0.03, {0.09}, Matrix{{0.2}}, Matrix{{0.3}}, LevyMeasure(1, {{{0.1}, 2.0}}));
}

MarketModel two_asset_market() {
  return MarketModel(0.02, {0.20, 0.06}, Matrix{{0.2, 0.0}, {0.0, 0.1}}, Matrix{{1.0, 0.0}, {0.0, 1.0}},
                     LevyMeasure(2, {{{0.3, -0.3}, 1.0}, {{-0.3, 0.3}, 1.0}}));
}

SingleAssetParams benchmark_params() { return {0.09, 0.03, 0.2, 0.0, 0.0, 0.1, 40.0}; }

SingleAssetParams jump_params() { return {0.09, 0.03, 0.2, 0.3, 0.02, 0.1, 40.0}; }

double sup_distance(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Boundary, ObjectiveIsLinearMinusPenalty) {
  const auto m = benchmark_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  EXPECT_NEAR(objective_T(m, g, 5.0, Vector{0.5}), 5.0 * 0.03 - 0.1, 1e-15);
}

TEST(Boundary, SingleAssetIsBangBang) {
  const auto m = benchmark_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  const double am = benchmark_params().a_minus();
  EXPECT_NEAR(am, 0.2 / 0.06, 1e-15);
  EXPECT_EQ(maximize_boundary(m, g, am - 0.1).c[0], 0.0);
  EXPECT_EQ(maximize_boundary(m, g, am).c[0], 0.0);
  const auto above = maximize_boundary(m, g, am + 0.1);
  EXPECT_EQ(above.c[0], 1.0);
  EXPECT_NEAR(above.value, 0.1 * 0.06, 1e-14);
  EXPECT_NEAR(a_minus(m, g, 0.1), am, 1e-11);
}

TEST(Boundary, JumpsEnterThroughKappa) {
  const auto p = jump_params();
  EXPECT_NEAR(p.kappa(), std::sqrt(0.04 + 0.09 * 0.02), 1e-15);
  const auto m = jump_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  EXPECT_NEAR(a_minus(m, g, 0.1), p.a_minus(), 1e-11);
  const auto b = increment_bounds(m, g);
  EXPECT_EQ(b.lower, 0.0);
  EXPECT_NEAR(b.upper, p.kappa(), 1e-15);
}

TEST(Boundary, TwoAssetMatchesCaseTable) {
  const auto m = two_asset_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  const auto p = TwoAssetParams::from_market(m);
  const double am = p.a_minus();
  const double ap = p.a_plus();
  EXPECT_NEAR(a_minus(m, g, 0.1), am, 1e-10);
  ASSERT_LT(am, ap);
  for (int k = 1; k < 20; ++k) {
    const double a = am + (ap - am) * k / 20.0;
    const auto got = maximize_boundary(m, g, a);
    const auto want = two_asset_closed_form(p, a);
    EXPECT_NEAR(got.c[0], want[0], 1e-6) << a;
    EXPECT_NEAR(got.c[1], want[1], 1e-6) << a;
  }
  EXPECT_NEAR(p.c_plus(ap), 1.0, 1e-8);
  const auto top = maximize_boundary(m, g, ap + 1.0);
  EXPECT_EQ(top.c[0], 1.0);
  EXPECT_EQ(top.c[1], 0.0);
  const auto low = maximize_boundary(m, g, am * 0.9);
  EXPECT_EQ(low.c[0], 0.0);
  EXPECT_EQ(low.c[1], 0.0);
}

TEST(Boundary, TwoAssetParamsRequireOrderedDrifts) {
  const auto m = MarketModel(0.02, {0.06, 0.20}, Matrix{{0.2, 0.0}, {0.0, 0.1}}, Matrix{{1.0, 0.0}, {0.0, 1.0}},
                             LevyMeasure(2, {{{0.3, -0.3}, 1.0}, {{-0.3, 0.3}, 1.0}}));
  EXPECT_THROW(TwoAssetParams::from_market(m), std::invalid_argument);
}

TEST(Boundary, ThreeAssetsAreUnsupported) {
  const auto m = MarketModel(0.0, {0.1, 0.1, 0.1}, Matrix::identity(3), Matrix(3, 3, 0.0), LevyMeasure(3));
  const auto g = Driver::joint_norm(1.0, m.measure());
  EXPECT_THROW(maximize_boundary(m, g, 1.0), UnsupportedDimension);
}

TEST(ClosedForm, SwitchTimeAndIndexCrossTogether) {
  const auto p = benchmark_params();
  EXPECT_NEAR(p.switch_time(), 40.0 + 1.0 / 0.06 - 50.0, 1e-12);
  const double ts = p.switch_time();
  EXPECT_NEAR(single_asset_switch_index(p, ts), p.a_minus(), 1e-12);
  EXPECT_NEAR(single_asset_switch_index(p, 40.0), 10.0, 1e-15);
  const auto sol = single_asset_closed_form(p, 4096);
  EXPECT_NEAR(sol.t_star, ts, 1e-12);
  EXPECT_NEAR(sol.a_star.back(), 10.0, 1e-15);
  for (std::size_t i = 0; i < sol.nodes(); ++i)
    EXPECT_NEAR(sol.a_star[i], std::max(p.a_minus(), 10.0 - p.kappa() * (40.0 - sol.grid[i])), 1e-12);
}

TEST(ClosedForm, JumpSwitchTime) {
  EXPECT_NEAR(jump_params().switch_time(), 7.7550678622, 1e-9);
}

TEST(FixedPoint, MatchesSingleAssetClosedForm) {
  const auto m = benchmark_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  FixedPointOptions opts;
  opts.grid_size = 1024;
  const auto sol = fixed_point(m, g, 0.1, 40.0, opts);
  const auto cf = single_asset_closed_form(benchmark_params(), 1024);
  EXPECT_LE(sup_distance(sol.a_star, cf.a_star), 1e-6);
  EXPECT_NEAR(sol.t_star, benchmark_params().switch_time(), 1e-6);
  EXPECT_LE(sup_distance(sol.b, cf.b), 1e-6 * cf.b.front());
  EXPECT_LE(sup_distance(sol.d, cf.d), 1e-6 * cf.d.front());
  EXPECT_LT(sol.residual, 10.0 * opts.tol);
  EXPECT_FALSE(sol.degenerate);
}

TEST(FixedPoint, MethodsAgree) {
  const auto m = jump_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  FixedPointOptions opts;
  opts.grid_size = 512;
  opts.method = FixedPointMethod::BackwardSweep;
  const auto sweep = fixed_point(m, g, 0.1, 40.0, opts);
  opts.method = FixedPointMethod::Jacobi;
  const auto jacobi = fixed_point(m, g, 0.1, 40.0, opts);
  EXPECT_GT(jacobi.iterations, sweep.iterations);
  EXPECT_LE(sup_distance(sweep.a_star, jacobi.a_star), 1e-8);
  EXPECT_NEAR(jacobi.t_star, jump_params().switch_time(), 1e-6);
}

TEST(FixedPoint, DegenerateCaseStaysRiskless) {
  const auto m = benchmark_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  FixedPointOptions opts;
  opts.grid_size = 256;
  const auto sol = fixed_point(m, g, 1.0, 10.0, opts);
  EXPECT_TRUE(sol.degenerate);
  EXPECT_LE(sol.s_top, 0.0);
  for (std::size_t i = 0; i < sol.nodes(); ++i) {
    EXPECT_EQ(sol.C_star[i][0], 0.0);
    EXPECT_EQ(sol.d[i], 0.0);
    EXPECT_NEAR(sol.b[i], std::exp(0.03 * (10.0 - sol.grid[i])), 1e-13);
  }
}

TEST(FixedPoint, StructuralInvariants) {
  const auto m = jump_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  FixedPointOptions opts;
  opts.grid_size = 512;
  const auto sol = fixed_point(m, g, 0.1, 40.0, opts);
  const auto bounds = increment_bounds(m, g);
  EXPECT_DOUBLE_EQ(sol.a_star.back(), 10.0);
  for (std::size_t i = 0; i + 1 < sol.nodes(); ++i) {
    const double dt = sol.grid[i + 1] - sol.grid[i];
    const double inc = sol.a_star[i + 1] - sol.a_star[i];
    EXPECT_GE(inc, bounds.lower * dt - 1e-12);
    EXPECT_LE(inc, bounds.upper * dt + 1e-12);
    EXPECT_GE(sol.a_star[i], sol.a_minus - 10.0 * opts.tol);
    EXPECT_TRUE(is_admissible(sol.C_star[i]));
    EXPECT_NEAR(sol.v[i], sol.b[i] - 0.1 * sol.d[i], 1e-12 * sol.b[i]);
    EXPECT_GE(sol.d[i], 0.0);
  }
}

TEST(FixedPoint, PolicySwitchesAtTStar) {
  const auto m = benchmark_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  FixedPointOptions opts;
  opts.grid_size = 300;
  const auto sol = fixed_point(m, g, 0.1, 40.0, opts);
  const auto policy = sol.to_policy();
  EXPECT_EQ(policy.at(sol.t_star - 1e-6)[0], 0.0);
  EXPECT_EQ(policy.at(sol.t_star + 1e-6)[0], 1.0);
  EXPECT_EQ(policy.at(39.9)[0], 1.0);
}

TEST(FixedPoint, ReportsNonConvergence) {
  const auto m = jump_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  FixedPointOptions opts;
  opts.grid_size = 256;
  opts.method = FixedPointMethod::Jacobi;
  opts.max_iter = 3;
  try {
    fixed_point(m, g, 0.1, 40.0, opts);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.iterations(), 3);
    EXPECT_GT(e.residual(), opts.tol);
  }
}

TEST(FixedPoint, RejectsBadInputs) {
  const auto m = benchmark_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  FixedPointOptions opts;
  opts.grid_size = 8;
  EXPECT_THROW(fixed_point(m, g, 0.1, 40.0, opts), std::invalid_argument);
  EXPECT_THROW(fixed_point(m, g, 0.0, 40.0), std::invalid_argument);
  EXPECT_THROW(fixed_point(m, g, 0.1, -1.0), std::invalid_argument);
}

TEST(FixedPoint, TwoAssetRegimesFollowCaseTable) {
  const auto m = two_asset_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  const auto p = TwoAssetParams::from_market(m);
  FixedPointOptions opts;
  opts.grid_size = 512;
  const auto sol = fixed_point(m, g, 0.1, 50.0, opts);
  EXPECT_NEAR(sol.t_star, 6.52234, 2e-3);
  opts.method = FixedPointMethod::BackwardSweep;
  EXPECT_LE(sup_distance(fixed_point(m, g, 0.1, 50.0, opts).a_star, sol.a_star), 1e-8);
  for (std::size_t i = 0; i < sol.nodes(); ++i) {
    const auto want = two_asset_closed_form(p, sol.a_star[i]);
    EXPECT_NEAR(sol.C_star[i][0], want[0], 1e-6) << i;
    EXPECT_NEAR(sol.C_star[i][1], want[1], 1e-6) << i;
  }
}

TEST(Generator, LinearAndDirectFormsAgree) {
  const auto m = two_asset_market();
  for (const Vector& c : {Vector{0.0, 0.0}, Vector{0.3, 0.4}, Vector{1.0, 0.0}}) {
    EXPECT_NEAR(generator_linear(m, c, 2.0, 1.5), generator_direct(m, c, 2.0, 1.5), 1e-14);
    EXPECT_NEAR(generator_jump_term(m, c, 2.0, 1.5), 0.0, 1e-14);
  }
}

TEST(Hjb, ResidualsVanishAwayFromTheSwitch) {
  const auto m = jump_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  FixedPointOptions opts;
  opts.grid_size = 4096;
  const auto sol = fixed_point(m, g, 0.1, 40.0, opts);
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < sol.nodes(); ++i) {
    for (double x : {0.5, 2.0}) {
      const auto r = hjb_residual(m, g, sol, i, x);
      if (r.near_kink) {
        ++excluded;
        continue;
      }
      EXPECT_LE(std::abs(r.res_v), 1e-6 * x) << sol.grid[i];
      EXPECT_LE(std::abs(r.res_h), 1e-6 * x) << sol.grid[i];
    }
  }
  EXPECT_LE(excluded, 6u);
}
