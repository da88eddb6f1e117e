#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "meandev/jumps.hpp"

using namespace meandev;

namespace {

LevyMeasure two_atoms() {
  return LevyMeasure(2, {{{0.3, -0.3}, 1.0}, {{-0.3, 0.3}, 2.0}});
}

}  // namespace

TEST(LevyMeasure, RejectsSupportAtOrBelowMinusOne) {
  EXPECT_THROW(LevyMeasure(1, {{{-1.0}, 1.0}}), std::invalid_argument);
  EXPECT_THROW(LevyMeasure(1, {{{-1.5}, 1.0}}), std::invalid_argument);
  EXPECT_NO_THROW(LevyMeasure(1, {{{-0.999}, 1.0}}));
}

TEST(LevyMeasure, RejectsNonPositiveMassAndWrongDimension) {
  EXPECT_THROW(LevyMeasure(1, {{{0.1}, 0.0}}), std::invalid_argument);
  EXPECT_THROW(LevyMeasure(1, {{{0.1}, -1.0}}), std::invalid_argument);
  EXPECT_THROW(LevyMeasure(2, {{{0.1}, 1.0}}), std::invalid_argument);
}

TEST(LevyMeasure, MomentsMatchHandSums) {
  const auto m = two_atoms();
  EXPECT_DOUBLE_EQ(m.total_mass(), 3.0);
  EXPECT_NEAR(nu2(m), 1.0 * 0.18 + 2.0 * 0.18, 1e-15);
  const auto mean = mean_vector(m);
  EXPECT_NEAR(mean[0], 0.3 - 0.6, 1e-15);
  EXPECT_NEAR(mean[1], -0.3 + 0.6, 1e-15);
  const auto M = m.second_moment_matrix();
  EXPECT_NEAR(M(0, 0), 0.27, 1e-15);
  EXPECT_NEAR(M(0, 1), -0.27, 1e-15);
  EXPECT_NEAR(M(1, 1), 0.27, 1e-15);
}

TEST(LevyMeasure, TraceOfSecondMomentIsNu2) {
  const auto m = two_atoms();
  const auto M = m.second_moment_matrix();
  EXPECT_NEAR(M(0, 0) + M(1, 1), nu2(m), 1e-15);
}

TEST(LevyMeasure, ConcatenationAddsMass) {
  const auto m = two_atoms();
  const auto both = m.concatenated(m);
  EXPECT_EQ(both.size(), 4u);
  EXPECT_DOUBLE_EQ(both.total_mass(), 2.0 * m.total_mass());
  EXPECT_THROW(m.concatenated(LevyMeasure(1)), std::invalid_argument);
}

TEST(Streams, SameSeedAndIndexGiveSameNumbers) {
  auto a = make_stream(7, 3);
  auto b = make_stream(7, 3);
  auto c = make_stream(7, 4);
  const auto xa = a();
  EXPECT_EQ(xa, b());
  EXPECT_NE(xa, c());
}

TEST(Sampling, PoissonCountsHaveIntensityMean) {
  const LevyMeasure m(1, {{{0.1}, 2.0}, {{-0.2}, 5.0}});
  auto stream = make_stream(11, 0);
  const int n = 40000;
  const double dt = 0.5;
  std::vector<double> total(2, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto counts = sample_jump_counts(m, dt, stream);
    for (std::size_t j = 0; j < 2; ++j) total[j] += static_cast<double>(counts[j]);
  }
  for (std::size_t j = 0; j < 2; ++j) {
    const double expected = m.atom(j).mass * dt;
    const double se = std::sqrt(expected / n);
    EXPECT_NEAR(total[j] / n, expected, 4.0 * se);
  }
}

TEST(Sampling, EventsAreSortedAndInsideInterval) {
  const auto m = two_atoms();
  auto stream = make_stream(5, 1);
  for (int i = 0; i < 200; ++i) {
    const auto events = sample_jump_events(m, 1.5, stream);
    for (std::size_t k = 0; k < events.size(); ++k) {
      EXPECT_GE(events[k].offset, 0.0);
      EXPECT_LT(events[k].offset, 1.5);
      EXPECT_LT(events[k].atom, m.size());
      if (k > 0) EXPECT_LE(events[k - 1].offset, events[k].offset);
    }
  }
}

TEST(Sampling, JumpsAreAtomLocations) {
  const auto m = two_atoms();
  auto stream = make_stream(3, 2);
  for (int i = 0; i < 100; ++i)
    for (const auto& y : sample_jumps(m, 1.0, stream))
      EXPECT_TRUE(y == m.atom(0).location || y == m.atom(1).location);
}

TEST(Sampling, EmptyMeasureNeverJumps) {
  const LevyMeasure m(1);
  auto stream = make_stream(1, 1);
  EXPECT_TRUE(sample_jump_events(m, 10.0, stream).empty());
  EXPECT_TRUE(sample_jumps(m, 10.0, stream).empty());
}
