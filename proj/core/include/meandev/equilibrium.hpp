#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "meandev/drivers.hpp"
#include "meandev/linalg.hpp"
#include "meandev/market.hpp"

namespace meandev {

// T_a(c) = a (mu - r 1)^T c - g^(c^T Sigma, c^T R I).
double objective_T(const MarketModel& model, const Driver& driver, double a, std::span<const double> c);

struct BoundaryMaximum {
  Vector c;
  double value = 0.0;
};

// argmax and max of T_a over the simplex boundary, which contains the vertex 0.
// Ties prefer 0, then the lexicographically smallest point. n > 2 throws
// UnsupportedDimension.
BoundaryMaximum maximize_boundary(const MarketModel& model, const Driver& driver, double a);

// Same over the outer face {c >= 0, Sum c = 1}. T_a is linear along rays
// from 0, so sup over the whole boundary is max(0, this).
BoundaryMaximum maximize_outer_face(const MarketModel& model, const Driver& driver, double a);

// Largest a in [0, 1/gamma] with s(a) <= 0, by bisection to 1e-12.
double a_minus(const MarketModel& model, const Driver& driver, double gamma);

// chi_- and chi_+: inf and sup of g^ over the boundary; a* increments lie in
// [chi_- (t - s), chi_+ (t - s)].
struct IncrementBounds {
  double lower = 0.0;
  double upper = 0.0;
};
IncrementBounds increment_bounds(const MarketModel& model, const Driver& driver);

enum class FixedPointMethod {
  // Damped Picard: simultaneous update of every node from the previous iterate.
  Jacobi,
  // Backward march: node i solves its own implicit cell equation using the
  // already-updated nodes above it. One sweep reaches the discrete fixed
  // point; later sweeps confirm it.
  BackwardSweep,
};

struct FixedPointOptions {
  std::size_t grid_size = 4096;  // number of cells
  double tol = 1e-10;
  int max_iter = 10000;
  double damping = 0.5;          // relaxation of the Jacobi update
  unsigned workers = 1;
  FixedPointMethod method = FixedPointMethod::Jacobi;
};

/// Equilibrium on a uniform grid t_i = T i / N. Value and conditional-mean
/// functions are linear in wealth: V(t, x) = x v(t), h(t, x) = x b(t).
struct EquilibriumSolution {
  Vector grid;
  Vector a_star;
  std::vector<Vector> C_star;
  Vector b;
  Vector d;
  Vector v;  // b - gamma d
  double a_minus = 0.0;
  double t_star = 0.0;  // -inf when the risky regime covers all of [0, T]
  double s_top = 0.0;   // s(1 / gamma)
  double gamma = 0.0;
  bool degenerate = false;
  int iterations = 0;
  double residual = 0.0;  // sup |a* - F(a*)|

  double horizon() const { return grid.back(); }
  std::size_t nodes() const { return grid.size(); }
  // Linear interpolation on the grid.
  double a_at(double t) const;
  double value(std::size_t node, double x) const { return x * v[node]; }
  double mean(std::size_t node, double x) const { return x * b[node]; }

  // Piecewise-constant policy on the grid with t* inserted: zero below t*,
  // the average of the two nodal allocations on risky cells.
  Policy to_policy() const;
};

// Fixed point of F(a)(t) = 1/gamma - int_t^T g^(C_a(s)) ds on the grid.
// Iterates until the sup-norm update is below tol, then certifies
// ||a - F(a)|| < 10 tol with a full evaluation of F. Throws ConvergenceError
// when max_iter is exhausted or the certificate fails.
EquilibriumSolution fixed_point(const MarketModel& model, const Driver& driver, double gamma, double horizon,
                                const FixedPointOptions& options = {});

struct SingleAssetParams {
  double mu;
  double r;
  double sigma;
  double jump_sensitivity;
  double nu2;
  double gamma;
  double horizon;

  double kappa() const;       // sqrt(Sigma^2 + R^2 nu2)
  double a_minus() const;     // kappa / (mu - r)
  double switch_time() const; // T + 1/(mu - r) - 1/(gamma kappa), capped at T
};

// One risky asset with the unit joint-norm driver: a*(t) = max(a_-, 1/gamma -
// kappa (T - t)), full investment above t*, riskless below.
EquilibriumSolution single_asset_closed_form(const SingleAssetParams& params, std::size_t grid_size);

// (1/gamma) / (1 + (mu - r)(T - t)) above t*, a_- below. Crosses a_- at the
// same t* as a*, but is not equal to 1/gamma - d/b.
double single_asset_switch_index(const SingleAssetParams& params, double t);

/// Two risky assets, unit joint-norm driver, S = Sigma Sigma^T + R M R^T with
/// M the second-moment matrix of the jump measure.
struct TwoAssetParams {
  double r;
  double mu1;
  double mu2;
  double s11;
  double s22;
  double s12;

  static TwoAssetParams from_market(const MarketModel& model);

  double d_plus() const { return s11 + s22 - 2.0 * s12; }
  double e_plus() const { return s12 - s22; }
  double eta(double a) const;
  // Stationary point of T_a along (c, 1 - c).
  double c_plus(double a) const;
  double a_plus() const;
  // Inverse maximal Sharpe ratio over the outer face.
  double a_minus() const;
};

// Case table: (1, 0) above a_- v a_+, (c_+, 1 - c_+) in between, 0 at or below a_-.
Vector two_asset_closed_form(const TwoAssetParams& params, double a);

struct HjbResidual {
  double t = 0.0;
  double x = 0.0;
  double res_v = 0.0;
  double res_h = 0.0;
  bool near_kink = false;  // stencil straddles t*; excluded from pass/fail
};

// x (v' + sup_B {mu_pi v - gamma b g^(pi)}) and x (b' + mu_{C*} b) at a grid
// node, with second-order finite differences in t. The supremum is taken over
// {0, boundary argmax at v / (gamma b), C*(t)} using generator_direct.
HjbResidual hjb_residual(const MarketModel& model, const Driver& driver, const EquilibriumSolution& solution,
                         std::size_t node, double x);

// L^pi (x w) = mu_pi x w, via the identity for linear functions.
double generator_linear(const MarketModel& model, std::span<const double> c, double x, double w);
// Same from the full operator: drift, diffusion and the atom sum of
// phi(x (1 + c^T R y)) - phi(x) - x c^T R y phi'(x) for phi(x) = x w.
double generator_direct(const MarketModel& model, std::span<const double> c, double x, double w);
// The atom-sum term alone; zero up to rounding for linear phi.
double generator_jump_term(const MarketModel& model, std::span<const double> c, double x, double w);

}  // namespace meandev
