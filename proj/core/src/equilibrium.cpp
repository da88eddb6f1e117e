#include "meandev/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

#include "meandev/errors.hpp"
#include "meandev/parallel.hpp"

namespace meandev {
namespace {

std::string scientific(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

}  // namespace

namespace {

// Nodes whose a lies within this band above a_- are treated as riskless.
constexpr double kRegimeBand = 1e-9;
constexpr double kGoldenTol = 1e-10;

void require_supported(const MarketModel& model) {
  if (model.assets() > 2)
    throw UnsupportedDimension("boundary maximization supports n <= 2, got n = " +
                               std::to_string(model.assets()));
}

// Maximizes a concave function on [0, 1].
template <typename F>
double golden_section(F&& f) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0;
  double hi = 1.0;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > kGoldenTol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = f(x1);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double objective_T(const MarketModel& model, const Driver& driver, double a, std::span<const double> c) {
  return a * model.excess_return(c) - penalty_rate(model, driver, c);
}

// Golden section resolves the argmax only to ~sqrt(eps), since T is flat
// there. Bisecting the sign of a central-difference slope gets to ~1e-11,
// which keeps the penalty a smooth function of a at fixed-point precision.
template <typename F>
double refine_stationary(F&& f, double c) {
  constexpr double h = 1e-4;
  constexpr double bracket = 1e-5;
  auto rising = [&](double x) { return f(x + h) > f(x - h); };
  double lo = c - bracket;
  double hi = c + bracket;
  if (lo < h || hi > 1.0 - h) return c;
  if (!rising(lo) || rising(hi)) return c;
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (rising(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

BoundaryMaximum maximize_outer_face(const MarketModel& model, const Driver& driver, double a) {
  require_supported(model);
  if (model.assets() == 1) {
    const Vector one{1.0};
    return {one, objective_T(model, driver, a, one)};
  }
  auto along = [&](double c) {
    const Vector p{c, 1.0 - c};
    return objective_T(model, driver, a, p);
  };
  const double c = refine_stationary(along, golden_section(along));
  // Candidates in lexicographic order; strict improvement required to move on.
  const Vector candidates[] = {{0.0, 1.0}, {c, 1.0 - c}, {1.0, 0.0}};
  BoundaryMaximum best{candidates[0], objective_T(model, driver, a, candidates[0])};
  for (std::size_t i = 1; i < 3; ++i) {
    const double value = objective_T(model, driver, a, candidates[i]);
    if (value > best.value) best = {candidates[i], value};
  }
  return best;
}

BoundaryMaximum maximize_boundary(const MarketModel& model, const Driver& driver, double a) {
  auto outer = maximize_outer_face(model, driver, a);
  if (outer.value > 0.0) return outer;
  return {Vector(model.assets(), 0.0), 0.0};
}

double a_minus(const MarketModel& model, const Driver& driver, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("a_minus: gamma must be positive");
  const double top = 1.0 / gamma;
  auto nonpositive = [&](double a) { return maximize_outer_face(model, driver, a).value <= 0.0; };
  if (nonpositive(top)) return top;
  double lo = 0.0;
  double hi = top;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (nonpositive(mid) ? lo : hi) = mid;
  }
  return lo;
}

IncrementBounds increment_bounds(const MarketModel& model, const Driver& driver) {
  require_supported(model);
  // g^ is convex, so its maximum over the boundary sits at a vertex; the
  // vertex 0 gives the minimum 0.
  IncrementBounds out;
  for (std::size_t i = 0; i < model.assets(); ++i) {
    Vector e(model.assets(), 0.0);
    e[i] = 1.0;
    out.upper = std::max(out.upper, penalty_rate(model, driver, e));
  }
  return out;
}

// ---------------------------------------------------------------------------

double EquilibriumSolution::a_at(double t) const {
  if (!(t >= grid.front()) || !(t <= grid.back())) throw std::out_of_range("a_at: t outside [0, T]");
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - grid.begin()), grid.size() - 1);
  const std::size_t lo = hi - 1;
  const double w = (t - grid[lo]) / (grid[hi] - grid[lo]);
  return (1.0 - w) * a_star[lo] + w * a_star[hi];
}

Policy EquilibriumSolution::to_policy() const {
  const std::size_t n = C_star.front().size();
  const Vector zero(n, 0.0);
  auto on = [&](std::size_t i) { return C_star[i] != zero; };
  Vector g{grid.front()};
  std::vector<Vector> alloc;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const bool left = on(i);
    const bool right = on(i + 1);
    if (left && right) {
      alloc.push_back(scaled(added(C_star[i], C_star[i + 1]), 0.5));
    } else if (right) {
      if (t_star > grid[i] && t_star < grid[i + 1]) {
        alloc.push_back(zero);
        g.push_back(t_star);
      }
      alloc.push_back(C_star[i + 1]);
    } else {
      alloc.push_back(zero);
    }
    g.push_back(grid[i + 1]);
  }
  return Policy(std::move(g), std::move(alloc));
}

namespace {

struct Sweep {
  Vector a;                   // F(f)
  std::vector<Vector> alloc;  // C_f at the nodes
  Vector log_b;
  Vector integral;            // int_t^T g^(C_f)
  double t_star = -std::numeric_limits<double>::infinity();
};

struct FaceAtThreshold {
  double penalty;
  double growth;
};

Sweep sweep(const MarketModel& model, const Driver& driver, double gamma, const Vector& grid, const Vector& f,
            double am, const FaceAtThreshold& face, unsigned workers) {
  const std::size_t nodes = grid.size();
  const double threshold = am + kRegimeBand;
  Sweep s;
  s.alloc.assign(nodes, Vector(model.assets(), 0.0));
  Vector pen(nodes, 0.0);
  Vector growth(nodes, model.rate());
  std::vector<char> on(nodes, 0);
  parallel_for(nodes, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (!(f[i] > threshold)) continue;
      auto best = maximize_boundary(model, driver, f[i]);
      if (best.value <= 0.0) continue;
      on[i] = 1;
      pen[i] = penalty_rate(model, driver, best.c);
      growth[i] = model.growth_rate(best.c);
      s.alloc[i] = std::move(best.c);
    }
  });

  s.log_b.assign(nodes, 0.0);
  s.integral.assign(nodes, 0.0);
  for (std::size_t i = nodes - 1; i-- > 0;) {
    const double dt = grid[i + 1] - grid[i];
    double dg;
    double dl;
    if (!on[i] && on[i + 1]) {
      // a crosses a_- inside the cell; integrate only the risky part.
      const double slope = pen[i + 1] + face.penalty;
      double cross = slope > 0.0 ? grid[i + 1] - 2.0 * (f[i + 1] - am) / slope : grid[i];
      cross = std::clamp(cross, grid[i], grid[i + 1]);
      const double risky = grid[i + 1] - cross;
      dg = risky * slope / 2.0;
      dl = risky * (growth[i + 1] + face.growth) / 2.0 + model.rate() * (cross - grid[i]);
      s.t_star = cross;
    } else {
      dg = dt * (pen[i] + pen[i + 1]) / 2.0;
      dl = dt * (growth[i] + growth[i + 1]) / 2.0;
    }
    s.integral[i] = s.integral[i + 1] + dg;
    s.log_b[i] = s.log_b[i + 1] + dl;
  }
  s.a.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) s.a[i] = 1.0 / gamma - s.integral[i];
  return s;
}

// One backward Gauss-Seidel pass. Node i solves
//   a_i = 1/gamma - G_{i+1} - cell(a_i, a_{i+1})
// with a_{i+1} already final. Each node starts from the explicit predictor,
// never from the previous sweep: the maximizer is only resolved to ~1e-10
// in c, and a sweep-dependent start would turn that into iteration noise.
Vector march(const MarketModel& model, const Driver& driver, double gamma, const Vector& grid, double am,
             const FaceAtThreshold& face, double tol) {
  const std::size_t nodes = grid.size();
  const double threshold = am + kRegimeBand;
  Vector a(nodes, 1.0 / gamma);
  double integral = 0.0;  // G_{i+1}
  auto risky_penalty = [&](double x, double& pen) {
    if (!(x > threshold)) return false;
    const auto best = maximize_boundary(model, driver, x);
    if (best.value <= 0.0) return false;
    pen = penalty_rate(model, driver, best.c);
    return true;
  };
  double pen_next = 0.0;
  bool on_next = risky_penalty(a.back(), pen_next);
  for (std::size_t i = nodes - 1; i-- > 0;) {
    const double dt = grid[i + 1] - grid[i];
    if (!on_next) {
      // Riskless from here down: the integral stops growing.
      std::fill(a.begin(), a.begin() + static_cast<long>(i) + 1, a[i + 1]);
      break;
    }
    const double base = 1.0 / gamma - integral;
    double x = base - dt * pen_next;
    double pen = 0.0;
    bool on = false;
    for (int k = 0; k < 100; ++k) {
      if (!risky_penalty(x, pen)) {
        on = false;
        break;
      }
      on = true;
      const double next = base - dt * (pen + pen_next) / 2.0;
      const double change = std::abs(next - x);
      x = next;
      if (change <= 1e-3 * tol) break;
    }
    if (on && risky_penalty(x, pen)) {
      // Keep the iterate itself and the penalty evaluated at it, so a later
      // evaluation of F sees the same integrand and differs only locally.
      integral += dt * (pen + pen_next) / 2.0;
      a[i] = x;
      pen_next = pen;
      continue;
    }
    // a crosses a_- inside this cell.
    const double slope = pen_next + face.penalty;
    double cross = slope > 0.0 ? grid[i + 1] - 2.0 * (a[i + 1] - am) / slope : grid[i];
    cross = std::clamp(cross, grid[i], grid[i + 1]);
    integral += (grid[i + 1] - cross) * slope / 2.0;
    a[i] = 1.0 / gamma - integral;
    on_next = false;
  }
  return a;
}

double sup_distance(const Vector& x, const Vector& y) {
  double out = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) out = std::max(out, std::abs(x[i] - y[i]));
  return out;
}

void fill_profiles(EquilibriumSolution& sol, const Sweep& s) {
  const std::size_t nodes = sol.grid.size();
  sol.b.resize(nodes);
  sol.d.resize(nodes);
  sol.v.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    sol.b[i] = std::exp(s.log_b[i]);
    sol.d[i] = sol.b[i] * s.integral[i];
    sol.v[i] = sol.b[i] - sol.gamma * sol.d[i];
  }
}

Vector uniform_grid(double horizon, std::size_t cells) {
  Vector grid(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) grid[i] = horizon * static_cast<double>(i) / static_cast<double>(cells);
  grid.back() = horizon;
  return grid;
}

}  // namespace

EquilibriumSolution fixed_point(const MarketModel& model, const Driver& driver, double gamma, double horizon,
                                const FixedPointOptions& options) {
  require_supported(model);
  if (!(gamma > 0.0)) throw std::invalid_argument("fixed_point: gamma must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("fixed_point: T must be positive");
  if (options.grid_size < 64) throw std::invalid_argument("fixed_point: grid_size must be >= 64");
  if (!(options.tol > 0.0)) throw std::invalid_argument("fixed_point: tol must be positive");
  if (!(options.damping > 0.0) || options.damping > 1.0)
    throw std::invalid_argument("fixed_point: damping must lie in (0, 1]");
  if (options.max_iter < 1) throw std::invalid_argument("fixed_point: max_iter must be >= 1");

  EquilibriumSolution sol;
  sol.grid = uniform_grid(horizon, options.grid_size);
  sol.gamma = gamma;
  sol.a_minus = a_minus(model, driver, gamma);
  sol.s_top = maximize_boundary(model, driver, 1.0 / gamma).value;
  const std::size_t nodes = sol.grid.size();

  if (sol.s_top <= 0.0) {
    sol.degenerate = true;
    sol.a_star.assign(nodes, 1.0 / gamma);
    sol.C_star.assign(nodes, Vector(model.assets(), 0.0));
    sol.t_star = horizon;
    sol.b.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) sol.b[i] = std::exp(model.rate() * (horizon - sol.grid[i]));
    sol.d.assign(nodes, 0.0);
    sol.v = sol.b;
    return sol;
  }

  const auto at_threshold = maximize_outer_face(model, driver, sol.a_minus);
  const FaceAtThreshold face{penalty_rate(model, driver, at_threshold.c), model.growth_rate(at_threshold.c)};

  Vector f(nodes, 1.0 / gamma);
  const double theta = options.damping;
  double step = std::numeric_limits<double>::infinity();
  int iter = 0;
  while (iter < options.max_iter) {
    ++iter;
    Vector next;
    if (options.method == FixedPointMethod::BackwardSweep) {
      next = march(model, driver, gamma, sol.grid, sol.a_minus, face, options.tol);
    } else {
      const Sweep s = sweep(model, driver, gamma, sol.grid, f, sol.a_minus, face, options.workers);
      next.resize(nodes);
      for (std::size_t i = 0; i < nodes; ++i) next[i] = (1.0 - theta) * f[i] + theta * s.a[i];
    }
    step = sup_distance(next, f);
    f = std::move(next);
    if (step < options.tol) break;
  }
  if (!(step < options.tol))
    throw ConvergenceError("fixed_point: no convergence after " + std::to_string(iter) +
                               " iterations, last update " + scientific(step),
                           step, iter);

  const Sweep final_sweep = sweep(model, driver, gamma, sol.grid, f, sol.a_minus, face, options.workers);
  sol.residual = sup_distance(f, final_sweep.a);
  sol.iterations = iter;
  if (!(sol.residual < 10.0 * options.tol))
    throw ConvergenceError("fixed_point: residual certificate failed, ||a - F(a)|| = " +
                               scientific(sol.residual),
                           sol.residual, iter);
  sol.a_star = f;
  sol.a_star.back() = 1.0 / gamma;
  sol.C_star = final_sweep.alloc;
  sol.t_star = final_sweep.t_star;
  fill_profiles(sol, final_sweep);
  return sol;
}

// ---------------------------------------------------------------------------

double SingleAssetParams::kappa() const {
  return std::sqrt(sigma * sigma + jump_sensitivity * jump_sensitivity * nu2);
}

double SingleAssetParams::a_minus() const { return kappa() / (mu - r); }

double SingleAssetParams::switch_time() const {
  return std::min(horizon + 1.0 / (mu - r) - 1.0 / (gamma * kappa()), horizon);
}

namespace {

void check_single(const SingleAssetParams& p) {
  if (!(p.mu > p.r)) throw std::invalid_argument("single asset: need mu > r");
  if (!(p.sigma >= 0.0) || !(p.jump_sensitivity >= 0.0) || !(p.nu2 >= 0.0))
    throw std::invalid_argument("single asset: Sigma, R, nu2 must be nonnegative");
  if (!(p.kappa() > 0.0)) throw std::invalid_argument("single asset: need Sigma^2 + R^2 nu2 > 0");
  if (!(p.gamma > 0.0) || !(p.horizon > 0.0)) throw std::invalid_argument("single asset: need gamma, T > 0");
}

}  // namespace

EquilibriumSolution single_asset_closed_form(const SingleAssetParams& p, std::size_t grid_size) {
  check_single(p);
  if (grid_size < 2) throw std::invalid_argument("single asset: grid_size must be >= 2");
  const double kappa = p.kappa();
  const double am = p.a_minus();
  EquilibriumSolution sol;
  sol.grid = uniform_grid(p.horizon, grid_size);
  sol.gamma = p.gamma;
  sol.a_minus = std::min(am, 1.0 / p.gamma);
  sol.s_top = std::max(0.0, (p.mu - p.r) / p.gamma - kappa);
  sol.degenerate = sol.s_top <= 0.0;
  double ts = p.switch_time();
  if (sol.degenerate) ts = p.horizon;
  if (ts < 0.0) ts = -std::numeric_limits<double>::infinity();
  sol.t_star = ts;
  const std::size_t nodes = sol.grid.size();
  sol.a_star.resize(nodes);
  sol.C_star.resize(nodes);
  sol.b.resize(nodes);
  sol.d.resize(nodes);
  sol.v.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    const double t = sol.grid[i];
    const bool risky = !sol.degenerate && t > ts;
    sol.a_star[i] = sol.degenerate ? 1.0 / p.gamma : std::max(am, 1.0 / p.gamma - kappa * (p.horizon - t));
    sol.C_star[i] = Vector{risky ? 1.0 : 0.0};
    if (sol.degenerate) {
      sol.b[i] = std::exp(p.r * (p.horizon - t));
      sol.d[i] = 0.0;
    } else if (risky) {
      sol.b[i] = std::exp(p.mu * (p.horizon - t));
      sol.d[i] = sol.b[i] * kappa * (p.horizon - t);
    } else {
      sol.b[i] = std::exp(p.mu * (p.horizon - ts) + p.r * (ts - t));
      sol.d[i] = sol.b[i] * kappa * (p.horizon - ts);
    }
    sol.v[i] = sol.b[i] - p.gamma * sol.d[i];
  }
  sol.a_star.back() = 1.0 / p.gamma;
  return sol;
}

double single_asset_switch_index(const SingleAssetParams& p, double t) {
  check_single(p);
  if (t <= p.switch_time()) return std::min(p.a_minus(), 1.0 / p.gamma);
  return (1.0 / p.gamma) / (1.0 + (p.mu - p.r) * (p.horizon - t));
}

// ---------------------------------------------------------------------------

TwoAssetParams TwoAssetParams::from_market(const MarketModel& model) {
  if (model.assets() != 2) throw std::invalid_argument("TwoAssetParams: need exactly two assets");
  const Matrix& sig = model.volatility_matrix();
  const Matrix& rho = model.jump_sensitivity();
  const Matrix s = sig * sig.transpose() + rho * model.measure().second_moment_matrix() * rho.transpose();
  TwoAssetParams p{model.rate(), model.drift()[0], model.drift()[1], s(0, 0), s(1, 1), s(0, 1)};
  if (!(p.mu1 > p.mu2 && p.mu2 > p.r)) throw std::invalid_argument("TwoAssetParams: need mu1 > mu2 > r");
  if (!(p.s12 < 0.0)) throw std::invalid_argument("TwoAssetParams: need s12 < 0");
  return p;
}

double TwoAssetParams::eta(double a) const {
  const double spread = a * (mu1 - mu2);
  const double dp = d_plus();
  const double ep = e_plus();
  return (ep * ep - spread * spread * s22) / (dp * (dp - spread * spread));
}

double TwoAssetParams::c_plus(double a) const {
  const double spread = a * (mu1 - mu2);
  if (spread * spread >= d_plus())
    throw std::domain_error("c_plus: a^2 (mu1 - mu2)^2 must be below d_+");
  const double ratio = e_plus() / d_plus();
  const double disc = ratio * ratio - eta(a);
  if (disc < 0.0) throw std::domain_error("c_plus: no real stationary point");
  return -ratio + std::sqrt(disc);
}

double TwoAssetParams::a_plus() const { return (s11 - s12) / ((mu1 - mu2) * std::sqrt(s11)); }

double TwoAssetParams::a_minus() const {
  const double m1 = mu1 - r;
  const double m2 = mu2 - r;
  const double det = s11 * s22 - s12 * s12;
  if (!(det > 0.0)) throw std::domain_error("TwoAssetParams: S must be positive definite");
  const double w1 = (s22 * m1 - s12 * m2) / det;
  const double w2 = (s11 * m2 - s12 * m1) / det;
  if (w1 >= 0.0 && w2 >= 0.0) return 1.0 / std::sqrt(m1 * w1 + m2 * w2);
  return 1.0 / std::max(m1 / std::sqrt(s11), m2 / std::sqrt(s22));
}

Vector two_asset_closed_form(const TwoAssetParams& params, double a) {
  const double am = params.a_minus();
  if (a <= am) return {0.0, 0.0};
  if (a > std::max(am, params.a_plus())) return {1.0, 0.0};
  const double c = params.c_plus(a);
  return {c, 1.0 - c};
}

// ---------------------------------------------------------------------------

double generator_linear(const MarketModel& model, std::span<const double> c, double x, double w) {
  return model.growth_rate(c) * x * w;
}

double generator_jump_term(const MarketModel& model, std::span<const double> c, double x, double w) {
  const auto payoff = model.jump_payoff(c);
  const auto& measure = model.measure();
  auto phi = [w](double y) { return y * w; };
  double total = 0.0;
  for (std::size_t j = 0; j < measure.size(); ++j) {
    const double z = x * payoff[j];
    total += measure.atom(j).mass * (phi(x + z) - phi(x) - z * w);
  }
  return total;
}

double generator_direct(const MarketModel& model, std::span<const double> c, double x, double w) {
  // phi(x) = x w: phi' = w and phi'' = 0, so the diffusion term vanishes.
  return x * model.growth_rate(c) * w + generator_jump_term(model, c, x, w);
}

HjbResidual hjb_residual(const MarketModel& model, const Driver& driver, const EquilibriumSolution& sol,
                         std::size_t node, double x) {
  const std::size_t n = sol.nodes();
  if (node >= n) throw std::out_of_range("hjb_residual: node index");
  if (n < 3) throw std::invalid_argument("hjb_residual: need at least three nodes");
  if (!(x > 0.0)) throw std::invalid_argument("hjb_residual: x must be positive");

  std::size_t lo;
  std::size_t hi;
  auto derivative = [&](const Vector& y) {
    if (node == 0) {
      lo = 0;
      hi = 2;
      return (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (sol.grid[2] - sol.grid[0]);
    }
    if (node == n - 1) {
      lo = n - 3;
      hi = n - 1;
      return (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (sol.grid[n - 1] - sol.grid[n - 3]);
    }
    lo = node - 1;
    hi = node + 1;
    return (y[node + 1] - y[node - 1]) / (sol.grid[node + 1] - sol.grid[node - 1]);
  };
  const double v_dot = derivative(sol.v);
  const double b_dot = derivative(sol.b);

  HjbResidual out;
  out.t = sol.grid[node];
  out.x = x;
  out.near_kink = !sol.degenerate && sol.t_star >= sol.grid[lo] && sol.t_star <= sol.grid[hi];

  const double v = sol.v[node];
  const double b = sol.b[node];
  auto reduced = [&](const Vector& c) {
    return generator_direct(model, c, x, v) - sol.gamma * x * b * penalty_rate(model, driver, c);
  };
  const Vector zero(model.assets(), 0.0);
  double best = reduced(zero);
  best = std::max(best, reduced(maximize_boundary(model, driver, v / (sol.gamma * b)).c));
  best = std::max(best, reduced(sol.C_star[node]));
  out.res_v = x * v_dot + best;
  out.res_h = x * b_dot + generator_direct(model, sol.C_star[node], x, b);
  return out;
}

}  // namespace meandev
