#include "meandev/market.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "meandev/parallel.hpp"

namespace meandev {

MarketModel::MarketModel(double rate, Vector drift, Matrix volatility, Matrix jump_sensitivity,
                         LevyMeasure measure)
    : rate_(rate),
      drift_(std::move(drift)),
      volatility_(std::move(volatility)),
      jump_sensitivity_(std::move(jump_sensitivity)),
      measure_(std::move(measure)) {
  const std::size_t n = drift_.size();
  if (!std::isfinite(rate_) || rate_ < 0.0) throw std::invalid_argument("MarketModel: r must be >= 0");
  if (n == 0) throw std::invalid_argument("MarketModel: at least one risky asset is required");
  if (volatility_.rows() != n) throw std::invalid_argument("MarketModel: sigma must have one row per asset");
  if (jump_sensitivity_.rows() != n) throw std::invalid_argument("MarketModel: R must have one row per asset");
  if (jump_sensitivity_.cols() != measure_.dimension())
    throw std::invalid_argument("MarketModel: R columns must match the jump dimension");
  if (n > volatility_.cols() || n > jump_sensitivity_.cols())
    throw std::invalid_argument("MarketModel: need n <= min(d, k)");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string where = "MarketModel: asset " + std::to_string(i);
    if (!std::isfinite(drift_[i]) || !(drift_[i] > rate_))
      throw std::invalid_argument(where + " must have mu > r");
    for (std::size_t j = 0; j < volatility_.cols(); ++j)
      if (!std::isfinite(volatility_(i, j)) || volatility_(i, j) < 0.0)
        throw std::invalid_argument(where + " has a negative or non-finite volatility");
    double row = 0.0;
    for (std::size_t j = 0; j < jump_sensitivity_.cols(); ++j) {
      const double v = jump_sensitivity_(i, j);
      if (!std::isfinite(v) || v < 0.0)
        throw std::invalid_argument(where + " has a negative or non-finite jump sensitivity");
      row += v;
    }
    if (row > 1.0 + 1e-12) throw std::invalid_argument(where + " has jump sensitivities summing above 1");
  }
  mean_jump_ = mean_vector(measure_);
}

double MarketModel::excess_return(std::span<const double> c) const {
  if (c.size() != assets()) throw std::invalid_argument("MarketModel: allocation has wrong length");
  double total = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) total += (drift_[i] - rate_) * c[i];
  return total;
}

double MarketModel::growth_rate(std::span<const double> c) const { return rate_ + excess_return(c); }

Vector MarketModel::volatility(std::span<const double> c) const {
  if (c.size() != assets()) throw std::invalid_argument("MarketModel: allocation has wrong length");
  return volatility_.left_multiply(c);
}

JumpPayoff MarketModel::jump_payoff(std::span<const double> c) const {
  if (c.size() != assets()) throw std::invalid_argument("MarketModel: allocation has wrong length");
  const Vector exposure = jump_sensitivity_.left_multiply(c);
  Vector values(measure_.size());
  for (std::size_t j = 0; j < values.size(); ++j) values[j] = dot(exposure, measure_.atom(j).location);
  return JumpPayoff(std::move(values));
}

double MarketModel::compensator(std::span<const double> c) const {
  if (c.size() != assets()) throw std::invalid_argument("MarketModel: allocation has wrong length");
  return dot(jump_sensitivity_.left_multiply(c), mean_jump_);
}

double penalty_rate(const MarketModel& model, const Driver& driver, std::span<const double> c) {
  return driver.eval(model.volatility(c), model.jump_payoff(c));
}

bool is_admissible(std::span<const double> c) {
  double total = 0.0;
  for (double v : c) {
    if (!std::isfinite(v) || v < 0.0) return false;
    total += v;
  }
  return total <= 1.0 + 1e-12;
}

// ---------------------------------------------------------------------------

Policy::Policy(Vector grid, std::vector<Vector> allocations)
    : grid_(std::move(grid)), allocations_(std::move(allocations)) {
  if (grid_.size() < 2) throw std::invalid_argument("Policy: grid needs at least two points");
  if (!(grid_.front() >= 0.0)) throw std::invalid_argument("Policy: grid must start at t >= 0");
  for (std::size_t i = 1; i < grid_.size(); ++i)
    if (!(grid_[i] > grid_[i - 1]) || !std::isfinite(grid_[i]))
      throw std::invalid_argument("Policy: grid must be strictly increasing");
  if (allocations_.size() != grid_.size() - 1)
    throw std::invalid_argument("Policy: need one allocation per cell");
  for (std::size_t i = 0; i < allocations_.size(); ++i) {
    if (allocations_[i].size() != allocations_.front().size() || allocations_[i].empty())
      throw std::invalid_argument("Policy: allocation length differs across cells");
    if (!is_admissible(allocations_[i]))
      throw std::invalid_argument("Policy: allocation in cell " + std::to_string(i) +
                                  " is outside B = {c >= 0, sum c <= 1}");
  }
}

Policy Policy::constant(double start, double horizon, Vector allocation) {
  return Policy({start, horizon}, {std::move(allocation)});
}

std::size_t Policy::cell_at(double t) const {
  if (!(t >= grid_.front()) || !(t <= grid_.back()))
    throw std::out_of_range("Policy: time outside the policy horizon");
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  const auto idx = static_cast<std::size_t>(it - grid_.begin());
  return std::min(idx == 0 ? 0 : idx - 1, cells() - 1);
}

Policy Policy::compacted() const {
  Vector grid{grid_.front()};
  std::vector<Vector> alloc{allocations_.front()};
  for (std::size_t i = 1; i < cells(); ++i) {
    if (allocations_[i] == alloc.back()) continue;
    grid.push_back(grid_[i]);
    alloc.push_back(allocations_[i]);
  }
  grid.push_back(grid_.back());
  return Policy(std::move(grid), std::move(alloc));
}

Policy Policy::refined(std::span<const double> points) const {
  Vector grid = grid_;
  for (double p : points)
    if (p > grid_.front() && p < grid_.back()) grid.push_back(p);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<Vector> alloc;
  alloc.reserve(grid.size() - 1);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) alloc.push_back(at(grid[i]));
  return Policy(std::move(grid), std::move(alloc));
}

Policy Policy::tail(double t) const {
  if (!(t >= grid_.front()) || !(t < grid_.back()))
    throw std::out_of_range("Policy: tail start must lie in [start, T)");
  Vector grid{t};
  std::vector<Vector> alloc{at(t)};
  for (std::size_t i = cell_at(t) + 1; i < cells(); ++i) {
    grid.push_back(grid_[i]);
    alloc.push_back(allocations_[i]);
  }
  grid.push_back(grid_.back());
  return Policy(std::move(grid), std::move(alloc));
}

namespace {

// int_t^T phi(pi(s)) ds for a per-cell quantity phi.
template <typename Rate>
double cell_integral(const Policy& policy, double t, Rate&& rate) {
  if (!(t >= policy.start()) || !(t <= policy.horizon()))
    throw std::out_of_range("Policy: time outside the policy horizon");
  double total = 0.0;
  const auto& grid = policy.grid();
  for (std::size_t i = 0; i < policy.cells(); ++i) {
    const double lo = std::max(grid[i], t);
    if (grid[i + 1] <= lo) continue;
    total += (grid[i + 1] - lo) * rate(policy.allocation(i));
  }
  return total;
}

}  // namespace

double growth_factor(const MarketModel& model, const Policy& policy, double t) {
  return std::exp(cell_integral(policy, t, [&](const Vector& c) { return model.growth_rate(c); }));
}

double wealth_mean(const MarketModel& model, const Policy& policy, double x0, double t) {
  return x0 * growth_factor(model, policy, t);
}

double penalty_integral(const MarketModel& model, const Driver& driver, const Policy& policy, double t) {
  return cell_integral(policy, t, [&](const Vector& c) { return penalty_rate(model, driver, c); });
}

// ---------------------------------------------------------------------------

WealthKernel::WealthKernel(const MarketModel& model, const Driver* driver, std::vector<Segment> segments)
    : model_(&model), segments_(std::move(segments)) {
  if (segments_.empty()) throw std::invalid_argument("WealthKernel: no segments");
  prepared_.resize(segments_.size());
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!(s.end > s.start)) throw std::invalid_argument("WealthKernel: empty segment");
    if (i > 0 && s.start != segments_[i - 1].end)
      throw std::invalid_argument("WealthKernel: segments must be contiguous");
    if (!is_admissible(s.allocation)) throw std::invalid_argument("WealthKernel: inadmissible allocation");
    auto& p = prepared_[i];
    p.length = s.end - s.start;
    p.vol = model.volatility(s.allocation);
    p.growth = model.growth_rate(s.allocation);
    p.compensator = model.compensator(s.allocation);
    p.log_drift = p.growth - p.compensator - 0.5 * squared_norm(p.vol);
    const JumpPayoff payoff = model.jump_payoff(s.allocation);
    p.jump_factor.resize(payoff.size());
    for (std::size_t j = 0; j < payoff.size(); ++j) p.jump_factor[j] = 1.0 + payoff[j];
    p.penalty = driver ? driver->eval(p.vol, payoff) : 0.0;
  }
  double log_b = 0.0;
  for (std::size_t i = prepared_.size(); i-- > 0;) {
    prepared_[i].growth_to_end = std::exp(log_b);
    log_b += prepared_[i].growth * prepared_[i].length;
  }
}

std::vector<WealthKernel::Segment> WealthKernel::segments_of(const Policy& policy) {
  std::vector<Segment> out;
  out.reserve(policy.cells());
  for (std::size_t i = 0; i < policy.cells(); ++i)
    out.push_back({policy.grid()[i], policy.grid()[i + 1], policy.allocation(i)});
  return out;
}

namespace {

// int_{u0}^{u1} exp(-k u) du
double discounted_length(double k, double u0, double u1) {
  if (k == 0.0) return u1 - u0;
  return std::exp(-k * u0) * -std::expm1(-k * (u1 - u0)) / k;
}

}  // namespace

WealthKernel::Outcome WealthKernel::run(double x, RandomStream& stream, std::vector<JumpRecord>* jumps,
                                        std::vector<double>* endpoint_wealth) const {
  const auto& measure = model_->measure();
  const std::size_t d = model_->brownian_dim();
  std::normal_distribution<double> normal;
  Outcome out;
  if (endpoint_wealth) endpoint_wealth->assign(segments_.size(), 0.0);
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& p = prepared_[i];
    const double start = segments_[i].start;
    const auto events = measure.empty() ? std::vector<JumpEvent>{}
                                        : sample_jump_events(measure, p.length, stream);
    double diffusion = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double z = normal(stream);
      diffusion += p.vol[j] * z;
    }
    if (p.penalty != 0.0) {
      double product = 1.0;
      double u = 0.0;
      double acc = 0.0;
      for (const auto& e : events) {
        acc += product * discounted_length(p.compensator, u, e.offset);
        product *= p.jump_factor[e.atom];
        u = e.offset;
      }
      acc += product * discounted_length(p.compensator, u, p.length);
      out.penalty += p.penalty * x * p.growth_to_end * std::exp(p.growth * p.length) * acc;
    }
    double factor = std::exp(p.log_drift * p.length + diffusion * std::sqrt(p.length));
    for (const auto& e : events) {
      factor *= p.jump_factor[e.atom];
      if (jumps) jumps->push_back({start + e.offset, e.atom});
    }
    x *= factor;
    if (endpoint_wealth) (*endpoint_wealth)[i] = x;
  }
  out.terminal = x;
  return out;
}

// ---------------------------------------------------------------------------

PathSet simulate(const MarketModel& model, const Policy& policy, double x0, const Vector& grid,
                 std::size_t n_paths, std::uint64_t seed, const SimulationOptions& options) {
  if (!(x0 > 0.0) || !std::isfinite(x0)) throw std::invalid_argument("simulate: x0 must be positive");
  if (grid.size() < 2) throw std::invalid_argument("simulate: grid needs at least two points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("simulate: grid must be strictly increasing");
  if (grid.front() < policy.start() || grid.back() > policy.horizon())
    throw std::invalid_argument("simulate: grid must lie inside the policy horizon");
  if (policy.assets() != model.assets()) throw std::invalid_argument("simulate: policy has wrong asset count");

  // Union of the simulation grid and the breakpoints where the allocation changes.
  const Policy compact = policy.compacted();
  Vector points = grid;
  for (double g : compact.grid())
    if (g > grid.front() && g < grid.back()) points.push_back(g);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  std::vector<WealthKernel::Segment> segments;
  segments.reserve(points.size() - 1);
  for (std::size_t i = 0; i + 1 < points.size(); ++i)
    segments.push_back({points[i], points[i + 1], compact.at(points[i])});
  const WealthKernel kernel(model, nullptr, std::move(segments));

  // Segment index ending at each simulation grid point.
  std::vector<std::size_t> report(grid.size() - 1);
  for (std::size_t k = 1; k < grid.size(); ++k)
    report[k - 1] = static_cast<std::size_t>(std::lower_bound(points.begin(), points.end(), grid[k]) -
                                             points.begin()) - 1;

  PathSet out;
  out.grid = grid;
  out.paths = n_paths;
  out.seed = seed;
  out.wealth.assign(n_paths * grid.size(), 0.0);
  if (options.record_jumps) out.jumps.resize(n_paths);

  parallel_for(n_paths, options.workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> endpoints;
    for (std::size_t p = begin; p < end; ++p) {
      auto stream = make_stream(seed, p);
      kernel.run(x0, stream, options.record_jumps ? &out.jumps[p] : nullptr, &endpoints);
      double* row = out.wealth.data() + p * grid.size();
      row[0] = x0;
      for (std::size_t k = 0; k < report.size(); ++k) row[k + 1] = endpoints[report[k]];
    }
  });
  return out;
}

RepresentingPair representing_pair_of_wealth(const MarketModel& model, const Policy& policy,
                                             const PathSet& paths, std::size_t path) {
  if (path >= paths.paths) throw std::out_of_range("representing_pair_of_wealth: path index");
  const std::size_t cells = paths.grid.size() - 1;
  std::vector<Vector> diffusion;
  std::vector<JumpPayoff> jumps;
  diffusion.reserve(cells);
  jumps.reserve(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const double t = paths.grid[i];
    const Vector& c = policy.at(t);
    const double scale = growth_factor(model, policy, t) * paths.at(path, i);
    diffusion.push_back(scaled(model.volatility(c), scale));
    jumps.push_back(model.jump_payoff(c).scaled(scale));
  }
  return RepresentingPair(paths.grid, std::move(diffusion), std::move(jumps), model.measure());
}

}  // namespace meandev
