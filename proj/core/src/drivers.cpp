#include "meandev/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace meandev {

double l2_squared(const JumpPayoff& payoff, const LevyMeasure& measure) {
  if (payoff.size() != measure.size())
    throw std::invalid_argument("JumpPayoff length does not match atom count");
  double total = 0.0;
  for (std::size_t j = 0; j < payoff.size(); ++j) total += measure.atom(j).mass * payoff[j] * payoff[j];
  return total;
}

Driver::Driver(DriverKind kind, double p1, double p2, LevyMeasure measure)
    : kind_(kind), p1_(p1), p2_(p2), measure_(std::move(measure)) {}

Driver Driver::split_norm(double c, double d, LevyMeasure measure) {
  if (!(c > 0.0) || !(d > 0.0)) throw std::invalid_argument("split norm driver needs c > 0, d > 0");
  return Driver(DriverKind::ScaledSplitNorm, c, d, std::move(measure));
}

Driver Driver::joint_norm(double lambda, LevyMeasure measure) {
  if (!(lambda > 0.0)) throw std::invalid_argument("joint norm driver needs lambda > 0");
  return Driver(DriverKind::ScaledJointNorm, lambda, 0.0, std::move(measure));
}

Driver Driver::cvar_jump(double a, LevyMeasure measure) {
  const double total = measure.total_mass();
  if (!(a > 0.0) || !(a < total))
    throw std::invalid_argument("CVaR jump driver needs 0 < a < total jump mass");
  return Driver(DriverKind::CvarJump, a, 0.0, std::move(measure));
}

std::string Driver::name() const {
  switch (kind_) {
    case DriverKind::ScaledSplitNorm: return "split_norm";
    case DriverKind::ScaledJointNorm: return "joint_norm";
    case DriverKind::CvarJump: return "cvar_jump";
  }
  return "unknown";
}

double Driver::linear_growth_constant() const {
  switch (kind_) {
    case DriverKind::ScaledSplitNorm: return weight_ * std::sqrt(2.0) * std::max(p1_, p2_);
    case DriverKind::ScaledJointNorm: return weight_ * p1_;
    // |CVaR| <= (1/a) Sum lambda_j |h~_j| <= sqrt(Lambda)/a ||h~|| by Cauchy-Schwarz.
    case DriverKind::CvarJump: return weight_ * std::sqrt(measure_.total_mass()) / p1_;
  }
  return 0.0;
}

double Driver::eval(std::span<const double> h, const JumpPayoff& htilde) const {
  if (htilde.size() != measure_.size())
    throw std::invalid_argument("driver eval: jump payoff length does not match atom count");
  switch (kind_) {
    case DriverKind::ScaledSplitNorm:
      return weight_ * (p1_ * norm(h) + p2_ * std::sqrt(l2_squared(htilde, measure_)));
    case DriverKind::ScaledJointNorm:
      return weight_ * p1_ * std::sqrt(squared_norm(h) + l2_squared(htilde, measure_));
    case DriverKind::CvarJump:
      return weight_ * cvar_nu(p1_, htilde, measure_);
  }
  return 0.0;
}

Driver Driver::scaled(double kappa) const {
  if (!(kappa > 0.0)) throw std::invalid_argument("driver scale must be positive");
  Driver out = *this;
  switch (kind_) {
    case DriverKind::ScaledSplitNorm:
      out.p1_ *= kappa;
      out.p2_ *= kappa;
      break;
    case DriverKind::ScaledJointNorm:
      out.p1_ *= kappa;
      break;
    case DriverKind::CvarJump:
      out.weight_ *= kappa;
      break;
  }
  return out;
}

double eval(const Driver& driver, std::span<const double> h, const JumpPayoff& htilde) {
  return driver.eval(h, htilde);
}

double cvar_nu(double a, const JumpPayoff& htilde, const LevyMeasure& measure) {
  if (htilde.size() != measure.size())
    throw std::invalid_argument("cvar_nu: jump payoff length does not match atom count");
  if (!(a > 0.0) || !(a < measure.total_mass()))
    throw std::invalid_argument("cvar_nu: tail mass must lie in (0, total mass)");
  std::vector<std::size_t> order(htilde.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return htilde[i] < htilde[j]; });
  double remaining = a;
  double weighted = 0.0;
  for (std::size_t j : order) {
    const double take = std::min(measure.atom(j).mass, remaining);
    weighted += take * htilde[j];
    remaining -= take;
    if (remaining <= 0.0) break;
  }
  return -weighted / a;
}

namespace {

Vector random_vector(std::size_t n, double scale, RandomStream& stream) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (auto& x : v) x = scale * normal(stream);
  return v;
}

}  // namespace

DriverAxiomReport check_driver_axioms(const Driver& driver, std::size_t samples,
                                      RandomStream& stream, std::size_t diffusion_dim) {
  DriverAxiomReport report;
  report.samples = samples;
  report.positivity_expected_failure = !driver.positive();
  const std::size_t atoms = driver.measure().size();
  const double K = driver.linear_growth_constant();
  std::uniform_real_distribution<double> log_scale(-2.0, 2.0);
  std::uniform_real_distribution<double> log_kappa(std::log(1e-3), std::log(1e3));

  auto check_positive = [&](std::span<const double> h, const JumpPayoff& p) {
    if (squared_norm(h) == 0.0 && squared_norm(p.values()) == 0.0) return;
    if (!(driver.eval(h, p) > 0.0)) ++report.positivity_violations;
  };

  for (std::size_t s = 0; s < samples; ++s) {
    const Vector h1 = random_vector(diffusion_dim, std::exp(log_scale(stream)), stream);
    const Vector h2 = random_vector(diffusion_dim, std::exp(log_scale(stream)), stream);
    const JumpPayoff p1(random_vector(atoms, std::exp(log_scale(stream)), stream));
    const JumpPayoff p2(random_vector(atoms, std::exp(log_scale(stream)), stream));
    const double kappa = std::exp(log_kappa(stream));

    const double g1 = driver.eval(h1, p1);
    const double g2 = driver.eval(h2, p2);

    const double gk = driver.eval(scaled(h1, kappa), p1.scaled(kappa));
    const double hom_scale = std::max(std::abs(kappa * g1), 1e-300);
    report.max_homogeneity_error = std::max(report.max_homogeneity_error, std::abs(gk - kappa * g1) / hom_scale);

    const double g12 = driver.eval(added(h1, h2), p1 + p2);
    report.max_subadditivity_excess = std::max(report.max_subadditivity_excess, g12 - (g1 + g2));

    const double bound = 1.0 + K * K * (squared_norm(h1) + l2_squared(p1, driver.measure()));
    report.max_growth_excess = std::max(report.max_growth_excess, g1 * g1 - bound);

    check_positive(h1, p1);
  }

  // Deterministic probes: an all-positive jump payoff and a pure diffusion input.
  if (atoms > 0) check_positive(Vector(diffusion_dim, 0.0), JumpPayoff(Vector(atoms, 1.0)));
  if (diffusion_dim > 0) {
    Vector e1(diffusion_dim, 0.0);
    e1[0] = 1.0;
    check_positive(e1, JumpPayoff::zero(atoms));
  }

  report.homogeneity_ok = report.max_homogeneity_error <= 1e-12;
  report.subadditivity_ok = report.max_subadditivity_excess <= 1e-12;
  report.growth_ok = report.max_growth_excess <= 1e-12;
  report.positivity_ok = report.positivity_violations == 0;
  return report;
}

}  // namespace meandev
