#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "meandev/drivers.hpp"
#include "meandev/jumps.hpp"
#include "meandev/linalg.hpp"

namespace meandev {

/// Deterministic martingale-representation coefficients of
///   X = x + int f dW + int g(s, y) N~(ds, dy)
/// on a time grid 0 = s_0 < ... < s_M = T. Both f (in R^d) and g (a payoff on
/// the atoms of the jump measure) are constant on each cell [s_i, s_{i+1}).
class RepresentingPair {
 public:
  RepresentingPair(Vector grid, std::vector<Vector> diffusion, std::vector<JumpPayoff> jumps,
                   LevyMeasure measure);

  static RepresentingPair zero(Vector grid, std::size_t diffusion_dim, LevyMeasure measure);
  static RepresentingPair constant(double horizon, Vector diffusion, JumpPayoff jump,
                                   LevyMeasure measure);

  const Vector& grid() const { return grid_; }
  std::size_t cells() const { return diffusion_.size(); }
  double horizon() const { return grid_.back(); }
  std::size_t diffusion_dim() const { return diffusion_dim_; }
  const LevyMeasure& measure() const { return measure_; }
  const Vector& diffusion(std::size_t cell) const { return diffusion_.at(cell); }
  const JumpPayoff& jump(std::size_t cell) const { return jumps_.at(cell); }

  // Index of the cell containing t (right-continuous; t = T maps to the last cell).
  std::size_t cell_at(double t) const;

  // sigma^2 = |f|^2 + ||g||^2_{L2(nu)} on a cell.
  double local_variance(std::size_t cell) const;

  bool is_zero() const;
  bool is_zero_after(double t) const;

  RepresentingPair scaled(double kappa) const;
  RepresentingPair operator+(const RepresentingPair& other) const;
  // Pair of E[X | F_t]: coefficients kept on [0, t), zero on [t, T].
  RepresentingPair truncated(double t) const;

 private:
  Vector grid_;
  std::vector<Vector> diffusion_;
  std::vector<JumpPayoff> jumps_;
  LevyMeasure measure_;
  std::size_t diffusion_dim_;
};

// D_t(X) = int_t^T g(f(s), g(s, .)) ds, exact as a sum over cells.
double deviation_integral(const Driver& driver, const RepresentingPair& pair, double t);

// phi(Phi^{-1}(alpha)) / alpha: the lower-tail CVaR of a standard normal.
double c_alpha(double alpha);

struct GridDeviationSpec {
  int level = 6;                 // dyadic grid t_i = T i / 2^level
  double alpha = 0.05;
  std::size_t samples = 20000;   // Monte Carlo draws per jump-bearing cell
  std::uint64_t seed = 42;
  unsigned workers = 1;
};

struct GridDeviationResult {
  double value = 0.0;
  double standard_error = 0.0;   // zero when every cell is Gaussian
  std::size_t cells = 0;
  std::size_t monte_carlo_cells = 0;
};

struct TailEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

// Empirical lower-tail CVaR at level alpha with the marginal order statistic
// split proportionally; the sample buffer is reordered in place.
TailEstimate lower_tail_average(std::span<double> samples, double alpha);

// D^(n)_0(X) = Sum_i sqrt(dt) CVaR_alpha(Delta M_{i+1}) with coefficients frozen at t_i.
GridDeviationResult grid_deviation(const RepresentingPair& pair, const GridDeviationSpec& spec);

// c_alpha * int_0^T sqrt(|f|^2 + ||g||^2_{L2(nu)}) ds.
double ddrm_limit(const RepresentingPair& pair, double alpha);

struct DynamicAxiomReport {
  std::size_t pairs = 0;
  double max_translation_error = 0.0;   // (D1)
  double max_homogeneity_error = 0.0;   // (D2), relative
  double max_subadditivity_excess = 0.0;  // (D3)
  std::size_t positivity_violations = 0;  // (D4)
  double max_recursion_error = 0.0;     // (D6), relative

  bool translation_ok = true;
  bool homogeneity_ok = true;
  bool subadditivity_ok = true;
  bool positivity_ok = true;
  bool recursion_ok = true;

  bool passed() const {
    return translation_ok && homogeneity_ok && subadditivity_ok && positivity_ok && recursion_ok;
  }
};

// (D1)-(D4) and (D6) on deviation_integral values. Pairs must share a grid.
// (D5) is not checked: lower semi-continuity has no finite-sample test.
DynamicAxiomReport check_dynamic_axioms(const Driver& driver,
                                        const std::vector<RepresentingPair>& pairs, double t);

}  // namespace meandev
