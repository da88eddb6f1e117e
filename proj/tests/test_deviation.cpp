#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

#include "meandev/deviation.hpp"
#include "meandev/normal.hpp"

using namespace meandev;

namespace {

// (1/alpha) int_0^alpha -Phi^{-1}(u) du, by quadrature of the Boost quantile.
double c_alpha_quadrature(double alpha) {
  const boost::math::normal_distribution<double> normal;
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double integral =
      integrator.integrate([&](double u) { return -boost::math::quantile(normal, u); }, 0.0, alpha);
  return integral / alpha;
}

std::vector<RepresentingPair> random_pairs(const LevyMeasure& measure, std::size_t count, std::uint64_t seed) {
  auto stream = make_stream(seed, 0);
  std::normal_distribution<double> n(0.0, 0.5);
  const Vector grid{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<RepresentingPair> pairs;
  for (std::size_t p = 0; p < count; ++p) {
    std::vector<Vector> f;
    std::vector<JumpPayoff> g;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      f.push_back({n(stream), n(stream)});
      Vector values(measure.size());
      for (auto& v : values) v = n(stream);
      g.emplace_back(values);
    }
    pairs.emplace_back(grid, f, g, measure);
  }
  return pairs;
}

const LevyMeasure kMeasure(1, {{{0.1}, 2.0}, {{-0.2}, 1.0}});

}  // namespace

TEST(Normal, QuantileInvertsCdf) {
  for (double p : {1e-10, 1e-4, 0.025, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9})
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-13 * std::max(1.0, p / (1.0 - p)));
  const boost::math::normal_distribution<double> normal;
  for (double p : {1e-8, 0.05, 0.5, 0.95})
    EXPECT_NEAR(normal_quantile(p), boost::math::quantile(normal, p), 1e-12);
}

TEST(CAlpha, MatchesQuantileQuadrature) {
  for (double alpha : {0.01, 0.05, 0.1, 0.25, 0.5})
    EXPECT_NEAR(c_alpha(alpha), c_alpha_quadrature(alpha), 1e-8) << alpha;
  EXPECT_NEAR(c_alpha(0.05), 2.0627, 5e-5);
  EXPECT_THROW(c_alpha(0.0), std::invalid_argument);
  EXPECT_THROW(c_alpha(1.0), std::invalid_argument);
}

TEST(TailAverage, SplitsMarginalOrderStatistic) {
  // alpha n = 2.5: two lowest in full, half of the third.
  std::vector<double> x{5, 1, 4, 2, 3, 6, 7, 8, 9, 10};
  const auto est = lower_tail_average(x, 0.25);
  EXPECT_NEAR(est.value, -(1.0 + 2.0 + 0.5 * 3.0) / 2.5, 1e-15);
  EXPECT_GT(est.standard_error, 0.0);
}

TEST(TailAverage, GaussianSamplesApproachCAlpha) {
  auto stream = make_stream(9, 0);
  std::normal_distribution<double> n;
  std::vector<double> x(400000);
  for (auto& v : x) v = n(stream);
  const auto est = lower_tail_average(x, 0.05);
  EXPECT_NEAR(est.value, c_alpha(0.05), 4.0 * est.standard_error + 1e-3);
}

TEST(RepresentingPair, ValidatesShapes) {
  EXPECT_THROW(RepresentingPair({0.0, 1.0}, {{0.1}, {0.2}}, {JumpPayoff::zero(2)}, kMeasure), std::invalid_argument);
  EXPECT_THROW(RepresentingPair({0.0, 1.0}, {{0.1}}, {JumpPayoff::zero(3)}, kMeasure), std::invalid_argument);
  EXPECT_THROW(RepresentingPair({1.0, 0.0}, {{0.1}}, {JumpPayoff::zero(2)}, kMeasure), std::invalid_argument);
}

TEST(RepresentingPair, CellLookupIsRightContinuous) {
  const auto pair = RepresentingPair::zero({0.0, 0.5, 1.0}, 1, kMeasure);
  EXPECT_EQ(pair.cell_at(0.0), 0u);
  EXPECT_EQ(pair.cell_at(0.5), 1u);
  EXPECT_EQ(pair.cell_at(1.0), 1u);
}

TEST(DeviationIntegral, ConstantPairIsRateTimesRemainingTime) {
  const auto pair = RepresentingPair::constant(2.0, {0.3, 0.4}, JumpPayoff(Vector{0.1, -0.2}), kMeasure);
  const auto g = Driver::joint_norm(1.5, kMeasure);
  const double rate = 1.5 * std::sqrt(0.25 + 2.0 * 0.01 + 1.0 * 0.04);
  EXPECT_NEAR(deviation_integral(g, pair, 0.0), 2.0 * rate, 1e-14);
  EXPECT_NEAR(deviation_integral(g, pair, 0.5), 1.5 * rate, 1e-14);
  EXPECT_NEAR(deviation_integral(g, pair, 2.0), 0.0, 1e-15);
}

TEST(DeviationIntegral, KnownQuantityHasZeroDeviation) {
  const auto pairs = random_pairs(kMeasure, 3, 4);
  const auto g = Driver::split_norm(1.0, 1.0, kMeasure);
  for (const auto& p : pairs) {
    EXPECT_EQ(deviation_integral(g, p.truncated(0.5), 0.5), 0.0);
    EXPECT_GT(deviation_integral(g, p, 0.5), 0.0);
  }
}

TEST(GridDeviation, GaussianPairIsExactAtEveryLevel) {
  const auto pair = RepresentingPair::constant(1.0, {0.2}, JumpPayoff::zero(0), LevyMeasure(1));
  for (int level = 2; level <= 12; ++level) {
    GridDeviationSpec spec;
    spec.level = level;
    const auto r = grid_deviation(pair, spec);
    EXPECT_NEAR(r.value, c_alpha(0.05) * 0.2, 1e-10) << level;
    EXPECT_EQ(r.standard_error, 0.0);
    EXPECT_EQ(r.monte_carlo_cells, 0u);
  }
}

TEST(GridDeviation, LimitIsCAlphaTimesIntegratedVolatility) {
  const auto pair = RepresentingPair::constant(1.0, {0.2}, JumpPayoff(Vector{0.25}), LevyMeasure(1, {{{0.5}, 4.0}}));
  EXPECT_NEAR(ddrm_limit(pair, 0.05), c_alpha(0.05) * std::sqrt(0.04 + 4.0 * 0.0625), 1e-14);
}

TEST(GridDeviation, IsReproducibleAndWorkerIndependent) {
  const auto pair = RepresentingPair::constant(1.0, {0.2}, JumpPayoff(Vector{0.25}), LevyMeasure(1, {{{0.5}, 4.0}}));
  GridDeviationSpec spec;
  spec.level = 4;
  spec.samples = 5000;
  const auto a = grid_deviation(pair, spec);
  spec.workers = 3;
  const auto b = grid_deviation(pair, spec);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.standard_error, b.standard_error);
  EXPECT_EQ(a.monte_carlo_cells, 16u);
}

// A rare jump (lambda dt << alpha) never reaches the alpha-tail of a grid
// increment, so at fixed intensity the grid deviation tends to c_alpha int |f|
// rather than the joint limit.
TEST(GridDeviation, RareJumpFallsOutOfTheTail) {
  const auto pair = RepresentingPair::constant(1.0, {0.2}, JumpPayoff(Vector{0.25}), LevyMeasure(1, {{{0.5}, 4.0}}));
  GridDeviationSpec spec;
  spec.level = 10;
  spec.samples = 20000;
  const auto r = grid_deviation(pair, spec);
  const double diffusion_only = c_alpha(0.05) * 0.2;
  EXPECT_LT(r.value, 0.6 * ddrm_limit(pair, 0.05));
  EXPECT_GT(r.value, diffusion_only - 3.0 * r.standard_error);
  EXPECT_LT(r.value - diffusion_only, 0.1);
}

TEST(GridDeviation, DenseSmallJumpsConvergeToLimit) {
  const double lambda = 1e7;
  const double g = std::sqrt(0.01 / lambda);
  const auto pair = RepresentingPair::constant(1.0, {0.2}, JumpPayoff(Vector{g}), LevyMeasure(1, {{{0.1}, lambda}}));
  GridDeviationSpec spec;
  spec.level = 8;
  const auto r = grid_deviation(pair, spec);
  const double limit = ddrm_limit(pair, 0.05);
  EXPECT_LT(std::abs(r.value - limit), std::max(0.01 * limit, 3.0 * r.standard_error));
}

TEST(DynamicAxioms, NormDriversPassOnRandomPairs) {
  const auto pairs = random_pairs(kMeasure, 100, 21);
  for (const auto& g : {Driver::joint_norm(1.0, kMeasure), Driver::split_norm(0.7, 1.3, kMeasure)}) {
    const auto report = check_dynamic_axioms(g, pairs, 0.3);
    EXPECT_TRUE(report.passed()) << g.name();
    EXPECT_EQ(report.pairs, 100u);
    EXPECT_LE(report.max_recursion_error, 1e-12);
    EXPECT_LE(report.max_translation_error, 1e-12);
  }
}

TEST(DynamicAxioms, RecursionHoldsAtEveryTime) {
  const auto pairs = random_pairs(kMeasure, 10, 5);
  const auto g = Driver::joint_norm(1.0, kMeasure);
  for (double t : {0.0, 0.25, 0.6, 1.0}) EXPECT_TRUE(check_dynamic_axioms(g, pairs, t).passed()) << t;
}

// Lower semi-continuity has no finite test; continuity in the pair stands in:
// |D(X) - D(Y)| <= max(D(X - Y), D(Y - X)) by subadditivity.
TEST(DeviationIntegral, LipschitzInThePair) {
  const auto pairs = random_pairs(kMeasure, 40, 13);
  const auto g = Driver::split_norm(0.8, 1.2, kMeasure);
  for (std::size_t i = 0; i + 1 < pairs.size(); ++i) {
    const auto& x = pairs[i];
    const auto& y = pairs[i + 1];
    const double gap = std::abs(deviation_integral(g, x, 0.0) - deviation_integral(g, y, 0.0));
    const double bound = std::max(deviation_integral(g, x + y.scaled(-1.0), 0.0),
                                  deviation_integral(g, y + x.scaled(-1.0), 0.0));
    EXPECT_LE(gap, bound + 1e-12);
  }
}
