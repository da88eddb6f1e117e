#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli.hpp"
#include "config.hpp"
#include "meandev/deviation.hpp"
#include "meandev/equilibrium.hpp"
#include "meandev/errors.hpp"
#include "meandev/market.hpp"
#include "meandev/validate.hpp"

namespace meandev::cli {

using nlohmann::json;

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// JSON has no infinities; -inf t* is written as null.
json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

class Artifacts {
 public:
  explicit Artifacts(const RunConfig& cfg) : dir_(cfg.output_dir) { std::filesystem::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    const auto path = dir_ / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    written_.push_back(path.string());
    return f;
  }

  void write_json(const std::string& name, const json& body) {
    auto f = open(name);
    f << body.dump(2) << '\n';
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> written_;
};

json report_header(const RunConfig& cfg, const std::string& command) {
  return json{{"command", command}, {"seed", cfg.numerics.seed}, {"config", cfg.resolved}};
}

EquilibriumSolution solve(const RunConfig& cfg) {
  cfg.require_market();
  cfg.require_driver();
  cfg.require_problem();
  const FixedPointOptions options{cfg.numerics.grid_size, cfg.numerics.tol, cfg.numerics.max_iter,
                                  cfg.numerics.damping, cfg.numerics.workers, cfg.numerics.method};
  return fixed_point(*cfg.market, *cfg.driver, cfg.gamma, cfg.horizon, options);
}

json solution_summary(const EquilibriumSolution& sol) {
  return json{{"a_minus", sol.a_minus},
              {"t_star", finite_or_null(sol.t_star)},
              {"s_top", sol.s_top},
              {"degenerate", sol.degenerate},
              {"iterations", sol.iterations},
              {"residual", sol.residual},
              {"b0", sol.b.front()},
              {"d0", sol.d.front()},
              {"v0", sol.v.front()}};
}

int cmd_deviation(const RunConfig& cfg, Artifacts& art, std::ostream& out) {
  cfg.require_pair();
  cfg.require_driver();
  const auto& pair = *cfg.pair;
  auto csv = art.open("deviation.csv");
  csv << "t,deviation\n";
  for (double t : pair.grid()) csv << fmt(t) << ',' << fmt(deviation_integral(*cfg.driver, pair, t)) << '\n';
  const double d0 = deviation_integral(*cfg.driver, pair, 0.0);
  const double limit = ddrm_limit(pair, cfg.numerics.alpha);
  auto report = report_header(cfg, "deviation");
  report["driver"] = cfg.driver->name();
  report["value"] = d0;
  report["alpha"] = cfg.numerics.alpha;
  report["ddrm_limit"] = limit;
  art.write_json("deviation.json", report);
  out << "deviation: D_0 = " << fmt(d0) << " (" << cfg.driver->name() << "), grid-CVaR limit = " << fmt(limit)
      << '\n';
  return kExitOk;
}

int cmd_convergence(const RunConfig& cfg, Artifacts& art, std::ostream& out) {
  cfg.require_pair();
  const auto& pair = *cfg.pair;
  const double limit = ddrm_limit(pair, cfg.numerics.alpha);
  auto csv = art.open("convergence.csv");
  csv << "n,grid_deviation,standard_error,limit,abs_error\n";
  json rows = json::array();
  for (int level : cfg.numerics.levels) {
    GridDeviationSpec spec;
    spec.level = level;
    spec.alpha = cfg.numerics.alpha;
    spec.samples = cfg.numerics.mc_samples;
    spec.seed = cfg.numerics.seed;
    spec.workers = cfg.numerics.workers;
    const auto r = grid_deviation(pair, spec);
    const double err = std::abs(r.value - limit);
    csv << level << ',' << fmt(r.value) << ',' << fmt(r.standard_error) << ',' << fmt(limit) << ',' << fmt(err)
        << '\n';
    rows.push_back({{"n", level}, {"grid_deviation", r.value}, {"standard_error", r.standard_error},
                    {"abs_error", err}});
  }
  auto report = report_header(cfg, "convergence");
  report["alpha"] = cfg.numerics.alpha;
  report["c_alpha"] = c_alpha(cfg.numerics.alpha);
  report["limit"] = limit;
  report["levels"] = rows;
  art.write_json("convergence.json", report);
  out << "convergence: " << cfg.numerics.levels.size() << " levels, limit = " << fmt(limit) << '\n';
  return kExitOk;
}

int cmd_policy(const RunConfig& cfg, Artifacts& art, std::ostream& out) {
  const auto sol = solve(cfg);
  const std::size_t n = cfg.market->assets();
  auto csv = art.open("policy.csv");
  csv << "t,a_star";
  for (std::size_t i = 0; i < n; ++i) csv << ",C_" << (i + 1);
  csv << ",b,d,v\n";
  for (std::size_t k = 0; k < sol.nodes(); ++k) {
    csv << fmt(sol.grid[k]) << ',' << fmt(sol.a_star[k]);
    for (double c : sol.C_star[k]) csv << ',' << fmt(c);
    csv << ',' << fmt(sol.b[k]) << ',' << fmt(sol.d[k]) << ',' << fmt(sol.v[k]) << '\n';
  }
  auto report = report_header(cfg, "policy");
  report["solution"] = solution_summary(sol);
  art.write_json("policy.json", report);
  out << "policy: a_- = " << fmt(sol.a_minus) << ", t* = " << fmt(sol.t_star) << ", iterations = " << sol.iterations
      << ", residual = " << fmt(sol.residual) << '\n';
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, Artifacts& art, std::ostream& out) {
  cfg.require_market();
  cfg.require_problem();
  const Policy policy = cfg.policy ? *cfg.policy : solve(cfg).to_policy();
  const std::size_t steps = cfg.numerics.sim_steps;
  Vector grid(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i)
    grid[i] = policy.start() + (policy.horizon() - policy.start()) * static_cast<double>(i) / static_cast<double>(steps);
  grid.back() = policy.horizon();
  SimulationOptions options;
  options.record_jumps = false;
  options.workers = cfg.numerics.workers;
  const auto paths = simulate(*cfg.market, policy, cfg.x0, grid, cfg.numerics.n_paths, cfg.numerics.seed, options);

  std::vector<double> terminal(paths.paths);
  double min_wealth = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < paths.paths; ++p) {
    terminal[p] = paths.terminal(p);
    for (std::size_t k = 0; k < grid.size(); ++k) min_wealth = std::min(min_wealth, paths.at(p, k));
  }
  auto csv = art.open("terminal.csv");
  csv << "path,terminal_wealth\n";
  for (std::size_t p = 0; p < terminal.size(); ++p) csv << p << ',' << fmt(terminal[p]) << '\n';

  double mean = 0.0;
  for (double x : terminal) mean += x;
  mean /= static_cast<double>(terminal.size());
  double ss = 0.0;
  for (double x : terminal) ss += (x - mean) * (x - mean);
  const double n = static_cast<double>(terminal.size());
  const double se = std::sqrt(ss / (n - 1.0) / n);
  auto sorted = terminal;
  std::sort(sorted.begin(), sorted.end());
  json quantiles;
  for (double q : {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99}) {
    const auto idx = static_cast<std::size_t>(std::floor(q * (n - 1.0)));
    quantiles[fmt(q)] = sorted[idx];
  }
  const double target = wealth_mean(*cfg.market, policy, cfg.x0, policy.start());
  auto report = report_header(cfg, "simulate");
  report["n_paths"] = paths.paths;
  report["mean"] = mean;
  report["standard_error"] = se;
  report["closed_form_mean"] = target;
  report["z"] = se > 0.0 ? (mean - target) / se : 0.0;
  report["min_wealth"] = min_wealth;
  report["max_terminal"] = sorted.back();
  report["quantiles"] = quantiles;
  art.write_json("simulate.json", report);
  out << "simulate: " << paths.paths << " paths, mean X_T = " << fmt(mean) << " +/- " << fmt(se)
      << " (closed form " << fmt(target) << ")\n";
  return kExitOk;
}

int cmd_validate(const RunConfig& cfg, Artifacts& art, std::ostream& out) {
  const auto sol = solve(cfg);
  const MonteCarloOptions mc{cfg.numerics.n_paths, cfg.numerics.seed, cfg.numerics.workers};
  const auto rep = estimate_objective(*cfg.market, *cfg.driver, cfg.gamma, sol.to_policy(), cfg.x0, mc);

  const double horizon = cfg.horizon;
  const double h = cfg.validate.h > 0.0 ? cfg.validate.h : horizon / 64.0;
  std::vector<double> times = cfg.validate.times;
  if (times.empty()) {
    const double start = std::isfinite(sol.t_star) ? std::max(sol.t_star, 0.0) : 0.0;
    times = {std::min(start + 1e-3 * horizon, horizon - h), 0.5 * (start + horizon), horizon - h};
  }
  std::vector<Vector> heads = cfg.validate.heads;
  if (heads.empty()) {
    const std::size_t n = cfg.market->assets();
    heads = {Vector(n, 0.0), Vector(n, 0.5 / static_cast<double>(n))};
  }
  for (const auto& head : heads)
    if (head.size() != cfg.market->assets())
      throw ConfigError(cfg.path, 1, "validate.heads: allocation length must equal the number of assets");

  auto estimate = [](const Estimate& e) {
    return json{{"value", e.value}, {"standard_error", e.standard_error}, {"target", e.target}, {"z", e.z()},
                {"pass", e.within()}};
  };
  json perturbations = json::array();
  bool perturbation_ok = true;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    if (!(t >= 0.0) || t + h > horizon * (1.0 + 1e-15))
      throw ConfigError(cfg.path, 1, "validate.times: need 0 <= t and t + h <= T");
    MonteCarloOptions pmc = mc;
    pmc.seed = mc.seed + 1 + k;
    const auto pr = perturbation_test(*cfg.market, *cfg.driver, sol, t, h, heads, cfg.x0, pmc);
    for (const auto& o : pr.outcomes) {
      perturbation_ok = perturbation_ok && o.passed();
      perturbations.push_back({{"t", t},
                               {"h", h},
                               {"head", o.head},
                               {"difference", o.difference},
                               {"standard_error", o.standard_error},
                               {"exact_difference", o.exact_difference},
                               {"ratio", o.ratio},
                               {"pass", o.passed()}});
    }
  }
  auto report = report_header(cfg, "validate");
  report["solution"] = solution_summary(sol);
  report["n_paths"] = rep.n_paths;
  report["gamma"] = rep.gamma;
  report["x0"] = rep.x0;
  report["mean"] = estimate(rep.mean);
  report["deviation"] = estimate(rep.deviation);
  report["objective"] = estimate(rep.objective);
  report["perturbation"] = perturbations;
  report["perturbation_note"] = "finite-h necessary-condition check, not a proof of the equilibrium criterion";
  const bool ok = rep.passed() && perturbation_ok;
  report["pass"] = ok;
  art.write_json("validate.json", report);
  out << "validate: J = " << fmt(rep.objective.value) << " +/- " << fmt(rep.objective.standard_error)
      << " vs V(0, x0) = " << fmt(rep.objective.target) << ", perturbation " << (perturbation_ok ? "ok" : "FAILED")
      << ", " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kExitOk : kExitFailure;
}

int cmd_hjb(const RunConfig& cfg, Artifacts& art, std::ostream& out) {
  const auto sol = solve(cfg);
  auto csv = art.open("hjb.csv");
  csv << "t,x,res_v,res_h,near_kink\n";
  double worst = 0.0;
  std::size_t excluded = 0;
  bool ok = true;
  for (double x : cfg.numerics.hjb_x) {
    for (std::size_t k = 0; k < sol.nodes(); ++k) {
      const auto r = hjb_residual(*cfg.market, *cfg.driver, sol, k, x);
      csv << fmt(r.t) << ',' << fmt(x) << ',' << fmt(r.res_v) << ',' << fmt(r.res_h) << ',' << (r.near_kink ? 1 : 0)
          << '\n';
      if (r.near_kink) {
        ++excluded;
        continue;
      }
      const double scaled_worst = std::max(std::abs(r.res_v), std::abs(r.res_h)) / x;
      worst = std::max(worst, scaled_worst);
      ok = ok && scaled_worst <= 1e-6;
    }
  }
  auto report = report_header(cfg, "hjb-check");
  report["solution"] = solution_summary(sol);
  report["max_residual_per_unit_wealth"] = worst;
  report["threshold_per_unit_wealth"] = 1e-6;
  report["excluded_near_kink"] = excluded;
  report["pass"] = ok;
  art.write_json("hjb.json", report);
  out << "hjb-check: max |res| / x = " << fmt(worst) << " (" << excluded << " nodes near t* excluded), "
      << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run(const std::string& subcommand, const std::string& config_path, const std::vector<std::string>& overrides,
        std::ostream& out, std::ostream& err) {
  using Command = int (*)(const RunConfig&, Artifacts&, std::ostream&);
  static const std::pair<const char*, Command> table[] = {
      {"deviation", cmd_deviation}, {"convergence", cmd_convergence}, {"policy", cmd_policy},
      {"simulate", cmd_simulate},   {"validate", cmd_validate},       {"hjb-check", cmd_hjb}};
  Command command = nullptr;
  for (const auto& [name, fn] : table)
    if (subcommand == name) command = fn;
  if (!command) {
    err << "meandev: unknown subcommand '" << subcommand << "'\n";
    return kExitUsage;
  }
  try {
    const auto cfg = load_config(config_path, overrides);
    const auto started = std::chrono::steady_clock::now();
    Artifacts art(cfg);
    const int code = command(cfg, art, out);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    // Runtime goes to stdout only so artifacts stay byte-identical across runs.
    out << "wrote " << art.written().size() << " file(s) to " << cfg.output_dir << " in " << fmt(seconds) << " s\n";
    return code;
  } catch (const ConfigError& e) {
    err << "meandev: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    err << "meandev: " << e.what() << " (residual " << fmt(e.residual()) << ", iterations " << e.iterations()
        << ")\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "meandev: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equilibrium mean-deviation portfolios under jump-diffusion markets", "meandev"};
  app.require_subcommand(1);
  std::string config;
  std::vector<std::string> overrides;
  std::string chosen;
  const char* names[][2] = {
      {"deviation", "deviation integral of a representing pair"},
      {"policy", "equilibrium policy by fixed-point iteration"},
      {"simulate", "simulate wealth paths under a policy"},
      {"validate", "Monte Carlo check of the value function and perturbation test"},
      {"hjb-check", "extended HJB residuals on the solution grid"},
      {"convergence", "grid CVaR deviation against its continuous-time limit"}};
  for (const auto& [name, help] : names) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "JSON config file")->required();
    sub->add_option("overrides", overrides, "dotted key=value overrides");
    sub->callback([&chosen, n = std::string(name)] { chosen = n; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "meandev: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }
  return run(chosen, config, overrides, out, err);
}

}  // namespace meandev::cli
