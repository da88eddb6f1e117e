#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "meandev/linalg.hpp"

namespace meandev {

// Per-worker random stream. Streams are derived from (seed, index) so that
// path i always sees the same numbers regardless of scheduling.
using RandomStream = std::mt19937_64;

RandomStream make_stream(std::uint64_t seed, std::uint64_t index);

struct Atom {
  Vector location;  // y_j in R^k, every coordinate > -1
  double mass;      // lambda_j > 0, intensity per unit time

  bool operator==(const Atom&) const = default;
};

/// Finite-activity Levy measure: a weighted sum of point masses in R^k.
///
/// Construction validates the support constraint (min coordinate > -1) and
/// strictly positive masses; invalid atoms are rejected, never clamped.
class LevyMeasure {
 public:
  explicit LevyMeasure(std::size_t dimension, std::vector<Atom> atoms = {});

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const Atom& atom(std::size_t j) const { return atoms_.at(j); }

  double total_mass() const;

  // Sum_j lambda_j y_j y_j^T (k x k).
  Matrix second_moment_matrix() const;

  LevyMeasure concatenated(const LevyMeasure& other) const;

  bool operator==(const LevyMeasure&) const = default;

 private:
  std::size_t dimension_;
  std::vector<Atom> atoms_;
};

// Sum_j lambda_j |y_j|^2.
double nu2(const LevyMeasure& measure);

// m_i = Sum_j lambda_j y_{j,i}; the compensator rate of the jump martingale.
Vector mean_vector(const LevyMeasure& measure);

// Poisson(lambda_j dt) count for every atom, in atom order.
std::vector<std::size_t> sample_jump_counts(const LevyMeasure& measure, double dt,
                                            RandomStream& stream);

// Multiset of jump vectors over an interval of length dt.
std::vector<Vector> sample_jumps(const LevyMeasure& measure, double dt, RandomStream& stream);

struct JumpEvent {
  double offset;     // time since the start of the interval, in [0, dt)
  std::size_t atom;  // index into measure.atoms()
};

// Jump events with uniform arrival offsets, sorted by offset. The draw count
// depends only on the measure and dt, never on a trading policy.
std::vector<JumpEvent> sample_jump_events(const LevyMeasure& measure, double dt,
                                          RandomStream& stream);

}  // namespace meandev
