#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "meandev/jumps.hpp"
#include "meandev/linalg.hpp"

namespace meandev {

// A jump payoff h~ evaluated on the atoms of a LevyMeasure, in atom order.
class JumpPayoff {
 public:
  JumpPayoff() = default;
  explicit JumpPayoff(Vector values) : values_(std::move(values)) {}

  static JumpPayoff zero(std::size_t atoms) { return JumpPayoff(Vector(atoms, 0.0)); }

  const Vector& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }

  JumpPayoff scaled(double factor) const { return JumpPayoff(meandev::scaled(values_, factor)); }
  JumpPayoff operator+(const JumpPayoff& other) const {
    return JumpPayoff(added(values_, other.values_));
  }
  JumpPayoff operator-() const { return scaled(-1.0); }

  bool operator==(const JumpPayoff&) const = default;

 private:
  Vector values_;
};

// Sum_j lambda_j h~_j^2, the squared L2(nu) norm.
double l2_squared(const JumpPayoff& payoff, const LevyMeasure& measure);

enum class DriverKind {
  ScaledSplitNorm,  // c|h| + d ||h~||_{L2(nu)}
  ScaledJointNorm,  // lambda sqrt(|h|^2 + ||h~||^2_{L2(nu)})
  CvarJump,         // lower-tail average of h~ over nu-mass a
};

/// Time-independent deviation driver g(h, h~).
///
/// All three kinds are convex and positively homogeneous. The two norm
/// kinds are also positive (g > 0 off the origin); CvarJump is not, since a
/// payoff that is positive on every atom has a negative tail average and a
/// pure diffusion input (h != 0, h~ = 0) is ignored altogether.
class Driver {
 public:
  static Driver split_norm(double c, double d, LevyMeasure measure);
  static Driver joint_norm(double lambda, LevyMeasure measure);
  static Driver cvar_jump(double a, LevyMeasure measure);

  DriverKind kind() const { return kind_; }
  const LevyMeasure& measure() const { return measure_; }
  std::string name() const;

  // Parameters: (c, d) for split norm, (lambda, -) for joint norm, (a, -) for CVaR.
  double first_parameter() const { return p1_; }
  double second_parameter() const { return p2_; }
  // Overall multiplier; 1 unless produced by scaled().
  double weight() const { return weight_; }

  bool convex() const { return true; }
  bool positively_homogeneous() const { return true; }
  bool positive() const { return kind_ != DriverKind::CvarJump; }
  bool symmetric() const { return kind_ != DriverKind::CvarJump; }

  // K in g^2 <= 1 + K^2 |h|^2 + K^2 ||h~||^2.
  double linear_growth_constant() const;

  double eval(std::span<const double> h, const JumpPayoff& htilde) const;

  // kappa * g, kappa > 0.
  Driver scaled(double kappa) const;

 private:
  Driver(DriverKind kind, double p1, double p2, LevyMeasure measure);

  DriverKind kind_;
  double p1_;
  double p2_;
  double weight_ = 1.0;
  LevyMeasure measure_;
};

double eval(const Driver& driver, std::span<const double> h, const JumpPayoff& htilde);

// Average of the lowest h~ values over nu-mass a, with the marginal atom
// split proportionally, negated so downside payoffs give a positive number.
double cvar_nu(double a, const JumpPayoff& htilde, const LevyMeasure& measure);

struct DriverAxiomReport {
  std::size_t samples = 0;
  double max_homogeneity_error = 0.0;   // relative
  double max_subadditivity_excess = 0.0;
  double max_growth_excess = 0.0;
  std::size_t positivity_violations = 0;

  bool homogeneity_ok = true;
  bool subadditivity_ok = true;
  bool growth_ok = true;
  bool positivity_ok = true;
  // The driver does not claim positivity, so a positivity failure is the
  // documented behaviour rather than an error.
  bool positivity_expected_failure = false;

  bool passed() const {
    return homogeneity_ok && subadditivity_ok && growth_ok &&
           (positivity_ok || positivity_expected_failure);
  }
};

// Randomized axiom check. h is drawn in R^diffusion_dim and h~ on the
// driver's atoms; two deterministic probes (h~ = +1 with h = 0, and h = e_1
// with h~ = 0) are always included in the positivity check.
DriverAxiomReport check_driver_axioms(const Driver& driver, std::size_t samples,
                                      RandomStream& stream, std::size_t diffusion_dim = 2);

}  // namespace meandev
