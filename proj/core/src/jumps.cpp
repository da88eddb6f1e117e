#include "meandev/jumps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace meandev {

RandomStream make_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x6d656164u};
  return RandomStream(seq);
}

LevyMeasure::LevyMeasure(std::size_t dimension, std::vector<Atom> atoms)
    : dimension_(dimension), atoms_(std::move(atoms)) {
  if (dimension_ == 0) throw std::invalid_argument("LevyMeasure: dimension must be positive");
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    const auto& a = atoms_[j];
    const std::string where = "LevyMeasure: atom " + std::to_string(j);
    if (a.location.size() != dimension_) throw std::invalid_argument(where + " has wrong dimension");
    if (!(a.mass > 0.0) || !std::isfinite(a.mass))
      throw std::invalid_argument(where + " must have finite positive mass");
    for (double y : a.location) {
      if (!std::isfinite(y)) throw std::invalid_argument(where + " has a non-finite coordinate");
      if (!(y > -1.0)) throw std::invalid_argument(where + " violates min coordinate > -1");
    }
  }
}

double LevyMeasure::total_mass() const {
  double total = 0.0;
  for (const auto& a : atoms_) total += a.mass;
  return total;
}

Matrix LevyMeasure::second_moment_matrix() const {
  Matrix m(dimension_, dimension_);
  for (const auto& a : atoms_)
    for (std::size_t i = 0; i < dimension_; ++i)
      for (std::size_t k = 0; k < dimension_; ++k) m(i, k) += a.mass * a.location[i] * a.location[k];
  return m;
}

LevyMeasure LevyMeasure::concatenated(const LevyMeasure& other) const {
  if (other.dimension_ != dimension_) throw std::invalid_argument("LevyMeasure: dimension mismatch");
  auto atoms = atoms_;
  atoms.insert(atoms.end(), other.atoms_.begin(), other.atoms_.end());
  return LevyMeasure(dimension_, std::move(atoms));
}

double nu2(const LevyMeasure& measure) {
  double total = 0.0;
  for (const auto& a : measure.atoms()) total += a.mass * squared_norm(a.location);
  return total;
}

Vector mean_vector(const LevyMeasure& measure) {
  Vector m(measure.dimension(), 0.0);
  for (const auto& a : measure.atoms())
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += a.mass * a.location[i];
  return m;
}

std::vector<std::size_t> sample_jump_counts(const LevyMeasure& measure, double dt,
                                            RandomStream& stream) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_jump_counts: dt must be positive");
  std::vector<std::size_t> counts(measure.size(), 0);
  for (std::size_t j = 0; j < measure.size(); ++j) {
    std::poisson_distribution<long long> poisson(measure.atom(j).mass * dt);
    counts[j] = static_cast<std::size_t>(poisson(stream));
  }
  return counts;
}

std::vector<Vector> sample_jumps(const LevyMeasure& measure, double dt, RandomStream& stream) {
  const auto counts = sample_jump_counts(measure, dt, stream);
  std::vector<Vector> jumps;
  for (std::size_t j = 0; j < counts.size(); ++j)
    jumps.insert(jumps.end(), counts[j], measure.atom(j).location);
  return jumps;
}

std::vector<JumpEvent> sample_jump_events(const LevyMeasure& measure, double dt,
                                          RandomStream& stream) {
  const auto counts = sample_jump_counts(measure, dt, stream);
  std::uniform_real_distribution<double> uniform(0.0, dt);
  std::vector<JumpEvent> events;
  for (std::size_t j = 0; j < counts.size(); ++j)
    for (std::size_t c = 0; c < counts[j]; ++c) events.push_back({uniform(stream), j});
  std::sort(events.begin(), events.end(), [](const JumpEvent& a, const JumpEvent& b) {
    return a.offset < b.offset || (a.offset == b.offset && a.atom < b.atom);
  });
  return events;
}

}  // namespace meandev
