#include "meandev/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "meandev/normal.hpp"
#include "meandev/parallel.hpp"

namespace meandev {

RepresentingPair::RepresentingPair(Vector grid, std::vector<Vector> diffusion,
                                   std::vector<JumpPayoff> jumps, LevyMeasure measure)
    : grid_(std::move(grid)),
      diffusion_(std::move(diffusion)),
      jumps_(std::move(jumps)),
      measure_(std::move(measure)),
      diffusion_dim_(0) {
  if (grid_.size() < 2) throw std::invalid_argument("RepresentingPair: grid needs at least two points");
  if (grid_.front() != 0.0) throw std::invalid_argument("RepresentingPair: grid must start at 0");
  for (std::size_t i = 1; i < grid_.size(); ++i)
    if (!(grid_[i] > grid_[i - 1]) || !std::isfinite(grid_[i]))
      throw std::invalid_argument("RepresentingPair: grid must be finite and strictly increasing");
  if (diffusion_.size() != grid_.size() - 1 || jumps_.size() != grid_.size() - 1)
    throw std::invalid_argument("RepresentingPair: need one coefficient per cell");
  diffusion_dim_ = diffusion_.front().size();
  for (std::size_t i = 0; i < diffusion_.size(); ++i) {
    if (diffusion_[i].size() != diffusion_dim_)
      throw std::invalid_argument("RepresentingPair: diffusion dimension varies across cells");
    if (jumps_[i].size() != measure_.size())
      throw std::invalid_argument("RepresentingPair: jump payoff length does not match atom count");
    for (double v : diffusion_[i])
      if (!std::isfinite(v)) throw std::invalid_argument("RepresentingPair: non-finite diffusion value");
    for (double v : jumps_[i].values())
      if (!std::isfinite(v)) throw std::invalid_argument("RepresentingPair: non-finite jump value");
  }
}

RepresentingPair RepresentingPair::zero(Vector grid, std::size_t diffusion_dim, LevyMeasure measure) {
  const std::size_t cells = grid.size() < 2 ? 0 : grid.size() - 1;
  const std::size_t atoms = measure.size();
  return RepresentingPair(std::move(grid), std::vector<Vector>(cells, Vector(diffusion_dim, 0.0)),
                          std::vector<JumpPayoff>(cells, JumpPayoff::zero(atoms)), std::move(measure));
}

RepresentingPair RepresentingPair::constant(double horizon, Vector diffusion, JumpPayoff jump,
                                            LevyMeasure measure) {
  return RepresentingPair({0.0, horizon}, {std::move(diffusion)}, {std::move(jump)}, std::move(measure));
}

std::size_t RepresentingPair::cell_at(double t) const {
  if (t <= grid_.front()) return 0;
  if (t >= grid_.back()) return cells() - 1;
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  return static_cast<std::size_t>(it - grid_.begin()) - 1;
}

double RepresentingPair::local_variance(std::size_t cell) const {
  return squared_norm(diffusion_.at(cell)) + l2_squared(jumps_.at(cell), measure_);
}

bool RepresentingPair::is_zero() const { return is_zero_after(0.0); }

bool RepresentingPair::is_zero_after(double t) const {
  for (std::size_t i = 0; i < cells(); ++i) {
    if (grid_[i + 1] <= t) continue;
    if (squared_norm(diffusion_[i]) != 0.0 || squared_norm(jumps_[i].values()) != 0.0) return false;
  }
  return true;
}

RepresentingPair RepresentingPair::scaled(double kappa) const {
  RepresentingPair out = *this;
  for (auto& f : out.diffusion_) f = meandev::scaled(f, kappa);
  for (auto& g : out.jumps_) g = g.scaled(kappa);
  return out;
}

RepresentingPair RepresentingPair::operator+(const RepresentingPair& other) const {
  if (grid_ != other.grid_) throw std::invalid_argument("RepresentingPair sum: grids differ");
  if (!(measure_ == other.measure_)) throw std::invalid_argument("RepresentingPair sum: measures differ");
  if (diffusion_dim_ != other.diffusion_dim_)
    throw std::invalid_argument("RepresentingPair sum: diffusion dimensions differ");
  RepresentingPair out = *this;
  for (std::size_t i = 0; i < cells(); ++i) {
    out.diffusion_[i] = added(diffusion_[i], other.diffusion_[i]);
    out.jumps_[i] = jumps_[i] + other.jumps_[i];
  }
  return out;
}

RepresentingPair RepresentingPair::truncated(double t) const {
  if (t < 0.0 || t > horizon()) throw std::invalid_argument("RepresentingPair::truncated: t outside [0, T]");
  Vector grid;
  std::vector<Vector> diffusion;
  std::vector<JumpPayoff> jumps;
  grid.push_back(0.0);
  for (std::size_t i = 0; i < cells(); ++i) {
    const double a = grid_[i];
    const double b = grid_[i + 1];
    const bool keep = b <= t;
    if (a < t && t < b) {
      grid.push_back(t);
      diffusion.push_back(diffusion_[i]);
      jumps.push_back(jumps_[i]);
      grid.push_back(b);
      diffusion.push_back(Vector(diffusion_dim_, 0.0));
      jumps.push_back(JumpPayoff::zero(measure_.size()));
      continue;
    }
    grid.push_back(b);
    diffusion.push_back(keep ? diffusion_[i] : Vector(diffusion_dim_, 0.0));
    jumps.push_back(keep ? jumps_[i] : JumpPayoff::zero(measure_.size()));
  }
  return RepresentingPair(std::move(grid), std::move(diffusion), std::move(jumps), measure_);
}

double deviation_integral(const Driver& driver, const RepresentingPair& pair, double t) {
  if (!(t >= 0.0) || t > pair.horizon())
    throw std::invalid_argument("deviation_integral: t outside [0, T]");
  if (driver.measure().size() != pair.measure().size())
    throw std::invalid_argument("deviation_integral: driver and pair use different jump measures");
  const auto& grid = pair.grid();
  double total = 0.0;
  for (std::size_t i = 0; i < pair.cells(); ++i) {
    const double length = grid[i + 1] - std::max(grid[i], t);
    if (length <= 0.0) continue;
    total += length * driver.eval(pair.diffusion(i), pair.jump(i));
  }
  return total;
}

double c_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw std::invalid_argument("c_alpha: alpha must lie in (0, 1)");
  return normal_pdf(normal_quantile(alpha)) / alpha;
}

TailEstimate lower_tail_average(std::span<double> samples, double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("lower_tail_average: alpha must lie in (0, 1)");
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("lower_tail_average: need at least two samples");
  const double tail_count = alpha * static_cast<double>(n);
  const auto k = static_cast<std::size_t>(std::floor(tail_count));
  const double frac = tail_count - static_cast<double>(k);
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(k), samples.end());
  const double quantile = samples[k];
  double tail_sum = frac * quantile;
  for (std::size_t i = 0; i < k; ++i) tail_sum += samples[i];

  // Asymptotic variance of the Rockafellar-Uryasev form -q + E[(q - X)^+]/alpha.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = std::max(quantile - samples[i], 0.0);
    const double delta = y - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (y - mean);
  }
  const double var = m2 / static_cast<double>(n - 1);
  return {-tail_sum / tail_count, std::sqrt(var / static_cast<double>(n)) / alpha};
}

GridDeviationResult grid_deviation(const RepresentingPair& pair, const GridDeviationSpec& spec) {
  if (spec.level < 1 || spec.level > 30) throw std::invalid_argument("grid_deviation: level must be in [1, 30]");
  if (!(spec.alpha > 0.0) || !(spec.alpha < 1.0))
    throw std::invalid_argument("grid_deviation: alpha must lie in (0, 1)");
  if (spec.samples < 2) throw std::invalid_argument("grid_deviation: need at least two samples per cell");

  const std::size_t cells = std::size_t{1} << spec.level;
  const double T = pair.horizon();
  const double dt = T / static_cast<double>(cells);
  const double sqrt_dt = std::sqrt(dt);
  const double gaussian_tail = c_alpha(spec.alpha);
  const auto& measure = pair.measure();

  std::vector<double> contribution(cells, 0.0);
  std::vector<double> variance(cells, 0.0);
  std::vector<char> monte_carlo(cells, 0);

  parallel_for(cells, spec.workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> draws(spec.samples);
    for (std::size_t i = begin; i < end; ++i) {
      const double t = T * static_cast<double>(i) / static_cast<double>(cells);
      const std::size_t cell = pair.cell_at(t);
      const double vol = norm(pair.diffusion(cell));
      const JumpPayoff& g = pair.jump(cell);
      if (measure.empty() || squared_norm(g.values()) == 0.0) {
        contribution[i] = sqrt_dt * vol * sqrt_dt * gaussian_tail;
        continue;
      }
      monte_carlo[i] = 1;
      double compensator = 0.0;
      for (std::size_t j = 0; j < measure.size(); ++j) compensator += g[j] * measure.atom(j).mass * dt;

      auto stream = make_stream(spec.seed, (static_cast<std::uint64_t>(spec.level) << 48) | i);
      std::normal_distribution<double> normal;
      std::vector<std::poisson_distribution<long long>> counts;
      for (const auto& atom : measure.atoms()) counts.emplace_back(atom.mass * dt);
      for (auto& x : draws) {
        double increment = vol * sqrt_dt * normal(stream) - compensator;
        for (std::size_t j = 0; j < counts.size(); ++j)
          increment += g[j] * static_cast<double>(counts[j](stream));
        x = increment;
      }
      const TailEstimate tail = lower_tail_average(draws, spec.alpha);
      contribution[i] = sqrt_dt * tail.value;
      variance[i] = dt * tail.standard_error * tail.standard_error;
    }
  });

  GridDeviationResult result;
  result.cells = cells;
  double total_variance = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    result.value += contribution[i];
    total_variance += variance[i];
    result.monte_carlo_cells += monte_carlo[i] ? 1 : 0;
  }
  result.standard_error = std::sqrt(total_variance);
  return result;
}

double ddrm_limit(const RepresentingPair& pair, double alpha) {
  const double c = c_alpha(alpha);
  const auto& grid = pair.grid();
  double total = 0.0;
  for (std::size_t i = 0; i < pair.cells(); ++i)
    total += (grid[i + 1] - grid[i]) * std::sqrt(pair.local_variance(i));
  return c * total;
}

DynamicAxiomReport check_dynamic_axioms(const Driver& driver,
                                        const std::vector<RepresentingPair>& pairs, double t) {
  DynamicAxiomReport report;
  report.pairs = pairs.size();
  if (pairs.empty()) return report;
  const auto& first = pairs.front();
  for (const auto& p : pairs)
    if (p.grid() != first.grid()) throw std::invalid_argument("check_dynamic_axioms: pairs must share a grid");

  const RepresentingPair zero =
      RepresentingPair::zero(first.grid(), first.diffusion_dim(), first.measure());
  static constexpr double kappas[] = {1e-3, 0.37, 1.0, 2.5, 1e3};

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& x = pairs[i];
    const double dx = deviation_integral(driver, x, t);
    const double scale = std::max(1.0, std::abs(dx));

    // (D1): a constant has the zero pair, so X + m and X share coefficients.
    const double shifted = deviation_integral(driver, x + zero, t);
    report.max_translation_error = std::max(report.max_translation_error, std::abs(shifted - dx));
    report.max_translation_error =
        std::max(report.max_translation_error, std::abs(deviation_integral(driver, zero, t)));

    // (D2)
    const double kappa = kappas[i % std::size(kappas)];
    const double dk = deviation_integral(driver, x.scaled(kappa), t);
    report.max_homogeneity_error =
        std::max(report.max_homogeneity_error, std::abs(dk - kappa * dx) / std::max(kappa * scale, 1e-300));

    // (D3)
    const auto& y = pairs[(i + 1) % pairs.size()];
    const double dy = deviation_integral(driver, y, t);
    const double dxy = deviation_integral(driver, x + y, t);
    report.max_subadditivity_excess =
        std::max(report.max_subadditivity_excess, (dxy - dx - dy) / std::max(1.0, dx + dy));

    // (D4)
    if (!x.is_zero_after(t) && !(dx > 0.0)) ++report.positivity_violations;

    // (D6): D_0(X) = D_0(E[X | F_t]) + D_t(X).
    const double d0 = deviation_integral(driver, x, 0.0);
    const double head = deviation_integral(driver, x.truncated(t), 0.0);
    report.max_recursion_error =
        std::max(report.max_recursion_error, std::abs(d0 - (head + dx)) / std::max(1.0, std::abs(d0)));
  }

  report.translation_ok = report.max_translation_error <= 1e-12;
  report.homogeneity_ok = report.max_homogeneity_error <= 1e-12;
  report.subadditivity_ok = report.max_subadditivity_excess <= 1e-12;
  report.positivity_ok = report.positivity_violations == 0;
  report.recursion_ok = report.max_recursion_error <= 1e-12;
  return report;
}

}  // namespace meandev
