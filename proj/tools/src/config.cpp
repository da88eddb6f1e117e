#include "config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace meandev::cli {

using nlohmann::json;

ConfigError::ConfigError(const std::string& file, int line, const std::string& message)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

class Loader {
 public:
  Loader(std::string path, std::string text) : path_(std::move(path)), text_(std::move(text)) {}

  // Line of the first `"key"` after the previous key of the path, so nested
  // keys resolve inside their own block.
  int line_of(const std::vector<std::string>& keys) const {
    std::size_t pos = 0;
    std::size_t found = std::string::npos;
    for (const auto& k : keys) {
      if (k.empty()) continue;
      const auto at = text_.find("\"" + k + "\"", pos);
      if (at == std::string::npos) break;
      found = at;
      pos = at + 1;
    }
    if (found == std::string::npos) return 1;
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(found), '\n'));
  }

  int line_at_byte(std::size_t byte) const {
    byte = std::min(byte, text_.size());
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(byte), '\n'));
  }

  [[noreturn]] void fail(const std::vector<std::string>& keys, const std::string& message) const {
    std::string dotted;
    for (const auto& k : keys)
      if (!k.empty()) dotted += (dotted.empty() ? "" : ".") + k;
    throw ConfigError(path_, line_of(keys), dotted.empty() ? message : dotted + ": " + message);
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::string text_;
};

void check_keys(const Loader& L, const json& block, const std::string& name, const std::set<std::string>& allowed) {
  if (!block.is_object()) L.fail({name}, "must be an object");
  for (const auto& [key, _] : block.items())
    if (!allowed.count(key)) L.fail({name, key}, "unknown key");
}

double number(const Loader& L, const json& block, const std::string& name, const std::string& key) {
  const auto& v = block.at(key);
  if (!v.is_number()) L.fail({name, key}, "must be a number");
  return v.get<double>();
}

double number_or(const Loader& L, const json& block, const std::string& name, const std::string& key, double fallback) {
  return block.contains(key) ? number(L, block, name, key) : fallback;
}

double required(const Loader& L, const json& block, const std::string& name, const std::string& key) {
  if (!block.contains(key)) L.fail({name}, "missing key '" + key + "'");
  return number(L, block, name, key);
}

std::uint64_t count(const Loader& L, const json& block, const std::string& name, const std::string& key) {
  const auto& v = block.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) L.fail({name, key}, "must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

Vector vector_of(const Loader& L, const json& v, const std::vector<std::string>& where) {
  if (!v.is_array()) L.fail(where, "must be an array of numbers");
  Vector out;
  for (const auto& x : v) {
    if (!x.is_number()) L.fail(where, "must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<Vector> rows_of(const Loader& L, const json& v, const std::vector<std::string>& where) {
  if (!v.is_array()) L.fail(where, "must be an array of rows");
  std::vector<Vector> out;
  for (const auto& row : v) out.push_back(vector_of(L, row, where));
  return out;
}

Matrix matrix_of(const Loader& L, const json& v, const std::vector<std::string>& where) {
  const auto rows = rows_of(L, v, where);
  if (rows.empty() || rows.front().empty()) L.fail(where, "must be a non-empty matrix");
  for (const auto& r : rows)
    if (r.size() != rows.front().size()) L.fail(where, "rows must have equal length");
  return Matrix::from_rows(rows);
}

// Wraps model constructors so that their invariant failures point at the block.
template <typename F>
auto build(const Loader& L, const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    L.fail({name}, e.what());
  }
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("<override>", 1, "'" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &root;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!node->is_object()) throw ConfigError("<override>", 1, "'" + key + "' does not name an object path");
    node = &(*node)[path[i]];
  }
  if (!node->is_object() && !node->is_null())
    throw ConfigError("<override>", 1, "'" + key + "' does not name an object path");
  (*node)[path.back()] = value;
}

}  // namespace

void RunConfig::require_market() const {
  if (!market) throw ConfigError(path, 1, "this subcommand needs a 'market' block");
}
void RunConfig::require_driver() const {
  if (!driver) throw ConfigError(path, 1, "this subcommand needs a 'driver' block");
}
void RunConfig::require_problem() const {
  if (!has_problem) throw ConfigError(path, 1, "this subcommand needs a 'problem' block");
}
void RunConfig::require_pair() const {
  if (!pair) throw ConfigError(path, 1, "this subcommand needs a 'pair' block");
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const Loader L(path, text);

  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, L.line_at_byte(e.byte == 0 ? 0 : e.byte - 1), "parse error: " + std::string(e.what()));
  }
  if (!root.is_object()) throw ConfigError(path, 1, "top level must be an object");
  for (const auto& o : overrides) apply_override(root, o);

  check_keys(L, root, "", {"jumps", "market", "driver", "problem", "numerics", "pair", "policy", "validate", "output"});
  for (const auto& [key, _] : root.items())
    if (!root[key].is_object()) L.fail({key}, "must be an object");

  RunConfig cfg;
  cfg.path = path;

  // jumps
  if (root.contains("jumps")) {
    const auto& j = root["jumps"];
    check_keys(L, j, "jumps", {"dimension", "atoms"});
    const std::size_t k = j.contains("dimension") ? count(L, j, "jumps", "dimension") : 1;
    std::vector<Atom> atoms;
    if (j.contains("atoms")) {
      for (const auto& row : rows_of(L, j["atoms"], {"jumps", "atoms"})) {
        if (row.size() != k + 1) L.fail({"jumps", "atoms"}, "each row is (y_1, ..., y_k, lambda)");
        atoms.push_back({Vector(row.begin(), row.end() - 1), row.back()});
      }
    }
    cfg.measure = build(L, "jumps", [&] { return LevyMeasure(k, std::move(atoms)); });
  }

  // market
  if (root.contains("market")) {
    const auto& m = root["market"];
    check_keys(L, m, "market", {"r", "mu", "sigma", "R"});
    const double r = required(L, m, "market", "r");
    if (!m.contains("mu") || !m.contains("sigma")) L.fail({"market"}, "needs 'mu' and 'sigma'");
    const Vector mu = vector_of(L, m["mu"], {"market", "mu"});
    const Matrix sigma = matrix_of(L, m["sigma"], {"market", "sigma"});
    const Matrix rho = m.contains("R") ? matrix_of(L, m["R"], {"market", "R"})
                                       : Matrix(mu.size(), cfg.measure.dimension(), 0.0);
    cfg.market.emplace(build(L, "market", [&] { return MarketModel(r, mu, sigma, rho, cfg.measure); }));
  }

  // driver
  if (root.contains("driver")) {
    const auto& d = root["driver"];
    check_keys(L, d, "driver", {"kind", "lambda", "c", "d", "a"});
    if (!d.contains("kind") || !d["kind"].is_string()) L.fail({"driver"}, "needs a string 'kind'");
    const auto kind = d["kind"].get<std::string>();
    if (kind == "joint_norm") {
      const double lambda = number_or(L, d, "driver", "lambda", 1.0);
      cfg.driver.emplace(build(L, "driver", [&] { return Driver::joint_norm(lambda, cfg.measure); }));
    } else if (kind == "split_norm") {
      const double c = required(L, d, "driver", "c");
      const double dd = required(L, d, "driver", "d");
      cfg.driver.emplace(build(L, "driver", [&] { return Driver::split_norm(c, dd, cfg.measure); }));
    } else if (kind == "cvar_jump") {
      const double a = required(L, d, "driver", "a");
      cfg.driver.emplace(build(L, "driver", [&] { return Driver::cvar_jump(a, cfg.measure); }));
    } else {
      L.fail({"driver", "kind"}, "unknown driver kind '" + kind + "' (joint_norm, split_norm, cvar_jump)");
    }
  }

  // problem
  if (root.contains("problem")) {
    const auto& p = root["problem"];
    check_keys(L, p, "problem", {"gamma", "T", "x0"});
    cfg.has_problem = true;
    cfg.gamma = required(L, p, "problem", "gamma");
    cfg.horizon = required(L, p, "problem", "T");
    cfg.x0 = number_or(L, p, "problem", "x0", 1.0);
    if (!(cfg.gamma > 0.0)) L.fail({"problem", "gamma"}, "must be positive");
    if (!(cfg.horizon > 0.0)) L.fail({"problem", "T"}, "must be positive");
    if (!(cfg.x0 > 0.0)) L.fail({"problem", "x0"}, "must be positive");
  }

  // numerics
  if (root.contains("numerics")) {
    const auto& n = root["numerics"];
    check_keys(L, n, "numerics",
               {"grid_size", "tol", "max_iter", "damping", "method", "n_paths", "seed", "workers", "alpha", "mc_samples",
                "levels", "sim_steps", "hjb_x"});
    auto& o = cfg.numerics;
    if (n.contains("grid_size")) o.grid_size = count(L, n, "numerics", "grid_size");
    o.tol = number_or(L, n, "numerics", "tol", o.tol);
    if (n.contains("max_iter")) o.max_iter = static_cast<int>(count(L, n, "numerics", "max_iter"));
    o.damping = number_or(L, n, "numerics", "damping", o.damping);
    if (n.contains("method")) {
      const auto& m = n["method"];
      if (m == "picard") o.method = FixedPointMethod::Jacobi;
      else if (m == "backward_sweep") o.method = FixedPointMethod::BackwardSweep;
      else L.fail({"numerics", "method"}, "must be \"picard\" or \"backward_sweep\"");
    }
    if (n.contains("n_paths")) o.n_paths = count(L, n, "numerics", "n_paths");
    if (n.contains("seed")) o.seed = count(L, n, "numerics", "seed");
    if (n.contains("workers")) o.workers = static_cast<unsigned>(count(L, n, "numerics", "workers"));
    o.alpha = number_or(L, n, "numerics", "alpha", o.alpha);
    if (n.contains("mc_samples")) o.mc_samples = count(L, n, "numerics", "mc_samples");
    if (n.contains("levels")) {
      o.levels.clear();
      for (double v : vector_of(L, n["levels"], {"numerics", "levels"})) {
        if (v < 1 || v > 24 || v != static_cast<int>(v)) L.fail({"numerics", "levels"}, "levels are integers in [1, 24]");
        o.levels.push_back(static_cast<int>(v));
      }
    }
    if (n.contains("sim_steps")) o.sim_steps = count(L, n, "numerics", "sim_steps");
    if (n.contains("hjb_x")) o.hjb_x = vector_of(L, n["hjb_x"], {"numerics", "hjb_x"});
    if (o.grid_size < 64) L.fail({"numerics", "grid_size"}, "must be >= 64");
    if (!(o.tol > 0.0)) L.fail({"numerics", "tol"}, "must be positive");
    if (o.max_iter < 1) L.fail({"numerics", "max_iter"}, "must be >= 1");
    if (!(o.damping > 0.0) || o.damping > 1.0) L.fail({"numerics", "damping"}, "must lie in (0, 1]");
    if (o.n_paths < 2) L.fail({"numerics", "n_paths"}, "must be >= 2");
    if (!(o.alpha > 0.0) || !(o.alpha < 1.0)) L.fail({"numerics", "alpha"}, "must lie in (0, 1)");
    if (o.mc_samples < 2) L.fail({"numerics", "mc_samples"}, "must be >= 2");
    if (o.sim_steps < 1) L.fail({"numerics", "sim_steps"}, "must be >= 1");
    for (double x : o.hjb_x)
      if (!(x > 0.0)) L.fail({"numerics", "hjb_x"}, "wealth levels must be positive");
  }
  if (const char* env = std::getenv("MEANDEV_WORKERS"); env && *env) {
    char* end = nullptr;
    const long w = std::strtol(env, &end, 10);
    if (*end != '\0' || w < 0) throw ConfigError("MEANDEV_WORKERS", 1, "must be a nonnegative integer");
    cfg.numerics.workers = static_cast<unsigned>(w);
  }

  // pair
  if (root.contains("pair")) {
    const auto& p = root["pair"];
    check_keys(L, p, "pair", {"grid", "T", "f", "g"});
    if (!p.contains("f")) L.fail({"pair"}, "needs 'f'");
    const std::size_t atoms = cfg.measure.size();
    if (p.contains("T")) {
      if (p.contains("grid")) L.fail({"pair"}, "give either 'T' (constant pair) or 'grid', not both");
      const double horizon = number(L, p, "pair", "T");
      const Vector f = vector_of(L, p["f"], {"pair", "f"});
      const Vector g = p.contains("g") ? vector_of(L, p["g"], {"pair", "g"}) : Vector(atoms, 0.0);
      cfg.pair.emplace(build(L, "pair", [&] {
        return RepresentingPair::constant(horizon, f, JumpPayoff(g), cfg.measure);
      }));
    } else {
      if (!p.contains("grid")) L.fail({"pair"}, "needs 'grid' or 'T'");
      const Vector grid = vector_of(L, p["grid"], {"pair", "grid"});
      const auto f = rows_of(L, p["f"], {"pair", "f"});
      std::vector<JumpPayoff> g;
      if (p.contains("g")) {
        for (auto& row : rows_of(L, p["g"], {"pair", "g"})) g.emplace_back(std::move(row));
      } else {
        g.assign(f.size(), JumpPayoff::zero(atoms));
      }
      cfg.pair.emplace(build(L, "pair", [&] { return RepresentingPair(grid, f, g, cfg.measure); }));
    }
  }

  // policy
  if (root.contains("policy")) {
    const auto& p = root["policy"];
    check_keys(L, p, "policy", {"grid", "alloc"});
    if (!p.contains("grid") || !p.contains("alloc")) L.fail({"policy"}, "needs 'grid' and 'alloc'");
    const Vector grid = vector_of(L, p["grid"], {"policy", "grid"});
    const auto alloc = rows_of(L, p["alloc"], {"policy", "alloc"});
    cfg.policy.emplace(build(L, "policy", [&] { return Policy(grid, alloc); }));
    if (cfg.market && cfg.policy->assets() != cfg.market->assets())
      L.fail({"policy", "alloc"}, "allocation length must equal the number of assets");
  }

  // validate
  if (root.contains("validate")) {
    const auto& v = root["validate"];
    check_keys(L, v, "validate", {"heads", "times", "h"});
    if (v.contains("heads")) cfg.validate.heads = rows_of(L, v["heads"], {"validate", "heads"});
    if (v.contains("times")) cfg.validate.times = vector_of(L, v["times"], {"validate", "times"});
    cfg.validate.h = number_or(L, v, "validate", "h", 0.0);
    for (const auto& head : cfg.validate.heads)
      if (!is_admissible(head)) L.fail({"validate", "heads"}, "every head must lie in B");
    if (cfg.validate.h < 0.0) L.fail({"validate", "h"}, "must be positive");
  }

  // output
  if (root.contains("output")) {
    const auto& o = root["output"];
    check_keys(L, o, "output", {"dir"});
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) L.fail({"output", "dir"}, "must be a string");
      cfg.output_dir = o["dir"].get<std::string>();
    }
  }

  // Resolved view: defaults filled in so reports are self-describing.
  json resolved = root;
  auto& n = resolved["numerics"];
  n["grid_size"] = cfg.numerics.grid_size;
  n["tol"] = cfg.numerics.tol;
  n["max_iter"] = cfg.numerics.max_iter;
  n["damping"] = cfg.numerics.damping;
  n["method"] = cfg.numerics.method == FixedPointMethod::Jacobi ? "picard" : "backward_sweep";
  n["n_paths"] = cfg.numerics.n_paths;
  n["seed"] = cfg.numerics.seed;
  n["alpha"] = cfg.numerics.alpha;
  n["mc_samples"] = cfg.numerics.mc_samples;
  n["levels"] = cfg.numerics.levels;
  n["sim_steps"] = cfg.numerics.sim_steps;
  n["hjb_x"] = cfg.numerics.hjb_x;
  // Worker count changes scheduling only, never results; kept out of artifacts.
  n.erase("workers");
  resolved["output"]["dir"] = cfg.output_dir;
  cfg.resolved = std::move(resolved);
  return cfg;
}

}  // namespace meandev::cli
