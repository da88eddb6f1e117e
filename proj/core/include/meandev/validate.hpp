#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "meandev/drivers.hpp"
#include "meandev/equilibrium.hpp"
#include "meandev/market.hpp"

namespace meandev {

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
  double target = 0.0;

  double z() const;
  // |value - target| <= bands SE, plus rounding slack for zero-variance estimates.
  bool within(double bands = 3.0) const;
};

/// Monte Carlo check of J = E[X_T] - gamma D_0(X_T) against the closed-form
/// targets x0 b(0), x0 d(0) and x0 (b(0) - gamma d(0)) of the same policy.
struct ValidationReport {
  Estimate mean;
  Estimate deviation;
  Estimate objective;  // value = mean.value - gamma deviation.value
  double gamma = 0.0;
  double x0 = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;

  bool passed() const { return mean.within() && deviation.within() && objective.within(); }
};

struct MonteCarloOptions {
  std::size_t n_paths = 100000;
  std::uint64_t seed = 42;
  unsigned workers = 1;
};

// D_0 is estimated path by path as int X_{s-} b(s) g^(pi(s)) ds, integrated
// exactly between jumps given each path's jump times.
ValidationReport estimate_objective(const MarketModel& model, const Driver& driver, double gamma,
                                    const Policy& policy, double x0, const MonteCarloOptions& options = {});

struct PerturbationOutcome {
  Vector head;
  double difference = 0.0;  // J^{pi*} - J^{pi(h)}, Monte Carlo with common random numbers
  double standard_error = 0.0;
  double exact_difference = 0.0;  // same quantity from the cell-exact formulas
  double ratio = 0.0;             // difference / h

  bool passed() const { return difference >= -3.0 * standard_error; }
};

struct PerturbationReport {
  double t = 0.0;
  double x = 0.0;
  double h = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::vector<PerturbationOutcome> outcomes;

  bool passed() const;
};

// pi(h) plays `head` on [t, t + h) and the equilibrium policy afterwards.
// This is a necessary-condition check at a finite h, not a proof of the
// liminf criterion.
PerturbationReport perturbation_test(const MarketModel& model, const Driver& driver,
                                     const EquilibriumSolution& solution, double t, double h,
                                     const std::vector<Vector>& heads, double x,
                                     const MonteCarloOptions& options = {});

}  // namespace meandev
