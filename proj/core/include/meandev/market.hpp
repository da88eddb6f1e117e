#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "meandev/deviation.hpp"
#include "meandev/drivers.hpp"
#include "meandev/jumps.hpp"
#include "meandev/linalg.hpp"

namespace meandev {

/// Bank account at rate r plus n stocks driven by d Brownian factors and the
/// compensated jumps of a k-dimensional Levy measure:
///   dS_i / S_i- = mu_i dt + Sum_j sigma_ij dW_j + Sum_j rho_ij dL_j.
class MarketModel {
 public:
  MarketModel(double rate, Vector drift, Matrix volatility, Matrix jump_sensitivity, LevyMeasure measure);

  double rate() const { return rate_; }
  const Vector& drift() const { return drift_; }
  const Matrix& volatility_matrix() const { return volatility_; }
  const Matrix& jump_sensitivity() const { return jump_sensitivity_; }
  const LevyMeasure& measure() const { return measure_; }

  std::size_t assets() const { return drift_.size(); }
  std::size_t brownian_dim() const { return volatility_.cols(); }
  std::size_t jump_dim() const { return jump_sensitivity_.cols(); }

  // (mu - r 1)^T c
  double excess_return(std::span<const double> c) const;
  // mu_c = r + (mu - r 1)^T c
  double growth_rate(std::span<const double> c) const;
  // c^T Sigma
  Vector volatility(std::span<const double> c) const;
  // y_j -> c^T R y_j on every atom
  JumpPayoff jump_payoff(std::span<const double> c) const;
  // c^T R m, the compensator rate of the jump part of the wealth
  double compensator(std::span<const double> c) const;

 private:
  double rate_;
  Vector drift_;
  Matrix volatility_;
  Matrix jump_sensitivity_;
  LevyMeasure measure_;
  Vector mean_jump_;
};

// g^(c^T Sigma, c^T R I): the driver evaluated on the per-unit-wealth
// representing pair of an allocation c.
double penalty_rate(const MarketModel& model, const Driver& driver, std::span<const double> c);

// c in B = {c >= 0, Sum c <= 1}, with a 1e-12 slack on the budget.
bool is_admissible(std::span<const double> c);

/// Piecewise-constant, wealth-independent allocation on a time grid.
class Policy {
 public:
  Policy(Vector grid, std::vector<Vector> allocations);

  static Policy constant(double start, double horizon, Vector allocation);

  const Vector& grid() const { return grid_; }
  std::size_t cells() const { return allocations_.size(); }
  std::size_t assets() const { return allocations_.front().size(); }
  double start() const { return grid_.front(); }
  double horizon() const { return grid_.back(); }
  const Vector& allocation(std::size_t cell) const { return allocations_.at(cell); }

  std::size_t cell_at(double t) const;
  const Vector& at(double t) const { return allocations_[cell_at(t)]; }

  // Merge neighbouring cells with identical allocations.
  Policy compacted() const;
  // Same allocation path on a grid that also contains `points` (inside the horizon).
  Policy refined(std::span<const double> points) const;
  // Restriction to [t, T].
  Policy tail(double t) const;

 private:
  Vector grid_;
  std::vector<Vector> allocations_;
};

// exp(int_t^T mu_pi(s) ds): E[X_T | X_t = x] = x * growth_factor.
double growth_factor(const MarketModel& model, const Policy& policy, double t);

// x0 * exp(int_t^T (r + (mu - r 1)^T pi(s)) ds), cell-exact.
double wealth_mean(const MarketModel& model, const Policy& policy, double x0, double t);

// int_t^T g^(pi(s)) ds; the deviation of X_T from (t, x) is x * growth_factor * this.
double penalty_integral(const MarketModel& model, const Driver& driver, const Policy& policy, double t);

struct JumpRecord {
  double time;
  std::size_t atom;
};

struct PathSet {
  Vector grid;
  std::size_t paths = 0;
  std::vector<double> wealth;  // row-major, paths x grid.size()
  std::uint64_t seed = 0;
  std::vector<std::vector<JumpRecord>> jumps;  // empty unless recorded

  double at(std::size_t path, std::size_t point) const { return wealth[path * grid.size() + point]; }
  double terminal(std::size_t path) const { return at(path, grid.size() - 1); }
};

struct SimulationOptions {
  bool record_jumps = true;
  unsigned workers = 1;
};

// Exact log-space simulation: geometric Brownian motion between jumps with
// drift mu_c - c^T R m, multiplicative jumps (1 + c^T R y) at uniform arrival
// times. The simulation grid and the policy grid are merged internally; wealth
// is reported on the simulation grid. Deterministic given seed.
PathSet simulate(const MarketModel& model, const Policy& policy, double x0, const Vector& grid,
                 std::size_t n_paths, std::uint64_t seed, const SimulationOptions& options = {});

/// Per-path wealth stepping over a fixed list of constant-allocation segments.
/// Also accumulates an unbiased estimate of int X_{s-} b(s) g^(pi(s)) ds,
/// integrated exactly given the jump times of each segment.
class WealthKernel {
 public:
  struct Segment {
    double start;
    double end;
    Vector allocation;
  };

  struct Outcome {
    double terminal = 0.0;
    double penalty = 0.0;  // int X_{s-} b(s) g^(pi(s)) ds, conditioned on jumps
  };

  // Segments must be contiguous. driver may be null when no penalty is needed.
  WealthKernel(const MarketModel& model, const Driver* driver, std::vector<Segment> segments);

  static std::vector<Segment> segments_of(const Policy& policy);

  const std::vector<Segment>& segments() const { return segments_; }

  // Draw order per segment: jump events, then brownian_dim normals.
  Outcome run(double x, RandomStream& stream, std::vector<JumpRecord>* jumps = nullptr,
              std::vector<double>* endpoint_wealth = nullptr) const;

 private:
  struct Prepared {
    double length;
    double log_drift;       // (mu_c - c^T R m - |c^T Sigma|^2 / 2)
    double compensator;     // c^T R m
    double growth;          // mu_c
    Vector vol;             // c^T Sigma
    Vector jump_factor;     // 1 + c^T R y_j
    double penalty;         // g^(c)
    double growth_to_end;   // b at segment end
  };

  const MarketModel* model_;
  std::vector<Segment> segments_;
  std::vector<Prepared> prepared_;
};

// Representing pair of X_T along one simulated path for h(s, x) = x b(s):
// f = b(s) X_{s-} pi^T Sigma and g(y) = b(s) X_{s-} pi^T R y, frozen at the
// left end of each simulation cell.
RepresentingPair representing_pair_of_wealth(const MarketModel& model, const Policy& policy,
                                             const PathSet& paths, std::size_t path);

}  // namespace meandev
