#include "meandev/validate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "meandev/parallel.hpp"

namespace meandev {

double Estimate::z() const {
  if (standard_error > 0.0) return (value - target) / standard_error;
  return value == target ? 0.0 : std::copysign(INFINITY, value - target);
}

bool Estimate::within(double bands) const {
  // Relative 1e-9 slack: zero-variance estimators still carry summation rounding.
  return std::abs(value - target) <= bands * standard_error + 1e-9 * std::abs(target);
}

bool PerturbationReport::passed() const {
  return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.passed(); });
}

namespace {

struct SampleStats {
  double mean = 0.0;
  double standard_error = 0.0;
};

// Two-pass mean and standard error of the mean; deterministic in input order.
SampleStats stats(const std::vector<double>& xs) {
  SampleStats s;
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= n;
  if (xs.size() < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.standard_error = std::sqrt(ss / (n - 1.0) / n);
  return s;
}

Policy policy_of(const std::vector<WealthKernel::Segment>& segments) {
  Vector grid{segments.front().start};
  std::vector<Vector> alloc;
  for (const auto& s : segments) {
    grid.push_back(s.end);
    alloc.push_back(s.allocation);
  }
  return Policy(std::move(grid), std::move(alloc));
}

}  // namespace

ValidationReport estimate_objective(const MarketModel& model, const Driver& driver, double gamma,
                                    const Policy& policy, double x0, const MonteCarloOptions& options) {
  if (!(gamma > 0.0)) throw std::invalid_argument("estimate_objective: gamma must be positive");
  if (!(x0 > 0.0)) throw std::invalid_argument("estimate_objective: x0 must be positive");
  if (options.n_paths == 0) throw std::invalid_argument("estimate_objective: n_paths must be positive");
  if (policy.assets() != model.assets()) throw std::invalid_argument("estimate_objective: policy has wrong asset count");

  const Policy compact = policy.compacted();
  const WealthKernel kernel(model, &driver, WealthKernel::segments_of(compact));
  std::vector<double> terminal(options.n_paths);
  std::vector<double> penalty(options.n_paths);
  parallel_for(options.n_paths, options.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      auto stream = make_stream(options.seed, p);
      const auto out = kernel.run(x0, stream);
      terminal[p] = out.terminal;
      penalty[p] = out.penalty;
    }
  });
  std::vector<double> objective(options.n_paths);
  for (std::size_t p = 0; p < options.n_paths; ++p) objective[p] = terminal[p] - gamma * penalty[p];

  const double b0 = growth_factor(model, compact, compact.start());
  const double d0 = b0 * penalty_integral(model, driver, compact, compact.start());
  const auto m = stats(terminal);
  const auto d = stats(penalty);
  const auto j = stats(objective);

  ValidationReport report;
  report.gamma = gamma;
  report.x0 = x0;
  report.n_paths = options.n_paths;
  report.seed = options.seed;
  report.mean = {m.mean, m.standard_error, x0 * b0};
  report.deviation = {d.mean, d.standard_error, x0 * d0};
  report.objective = {m.mean - gamma * d.mean, j.standard_error, x0 * (b0 - gamma * d0)};
  return report;
}

PerturbationReport perturbation_test(const MarketModel& model, const Driver& driver,
                                     const EquilibriumSolution& solution, double t, double h,
                                     const std::vector<Vector>& heads, double x,
                                     const MonteCarloOptions& options) {
  const double horizon = solution.horizon();
  if (!(h > 0.0) || !(t >= 0.0) || t + h > horizon * (1.0 + 1e-15))
    throw std::invalid_argument("perturbation_test: need h > 0 and 0 <= t < t + h <= T");
  if (!(x > 0.0)) throw std::invalid_argument("perturbation_test: x must be positive");

  const Policy star = solution.to_policy().tail(t).compacted();
  const double switch_time = std::min(t + h, horizon);

  // Shared segment boundaries keep the random draws aligned across policies.
  Vector points = star.grid();
  if (switch_time < horizon) points.push_back(switch_time);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  std::vector<WealthKernel::Segment> base;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) base.push_back({points[i], points[i + 1], star.at(points[i])});
  const WealthKernel star_kernel(model, &driver, base);
  const Policy star_policy = policy_of(base);
  const double star_value = growth_factor(model, star_policy, t) *
                            (1.0 - solution.gamma * penalty_integral(model, driver, star_policy, t));

  PerturbationReport report;
  report.t = t;
  report.x = x;
  report.h = h;
  report.n_paths = options.n_paths;
  report.seed = options.seed;

  for (const auto& head : heads) {
    if (head.size() != model.assets() || !is_admissible(head))
      throw std::invalid_argument("perturbation_test: head must be an admissible allocation");
    auto segments = base;
    for (auto& s : segments)
      if (s.start < switch_time) s.allocation = head;
    const WealthKernel alt_kernel(model, &driver, segments);
    const Policy alt_policy = policy_of(segments);
    const double alt_value = growth_factor(model, alt_policy, t) *
                             (1.0 - solution.gamma * penalty_integral(model, driver, alt_policy, t));

    std::vector<double> diff(options.n_paths);
    parallel_for(options.n_paths, options.workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = begin; p < end; ++p) {
        auto s1 = make_stream(options.seed, p);
        auto s2 = s1;
        const auto a = star_kernel.run(x, s1);
        const auto b = alt_kernel.run(x, s2);
        diff[p] = (a.terminal - solution.gamma * a.penalty) - (b.terminal - solution.gamma * b.penalty);
      }
    });
    const auto st = stats(diff);
    PerturbationOutcome o;
    o.head = head;
    o.difference = st.mean;
    o.standard_error = st.standard_error;
    o.exact_difference = x * (star_value - alt_value);
    o.ratio = st.mean / h;
    report.outcomes.push_back(std::move(o));
  }
  return report;
}

}  // namespace meandev
