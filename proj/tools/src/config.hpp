#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "meandev/deviation.hpp"
#include "meandev/drivers.hpp"
#include "meandev/equilibrium.hpp"
#include "meandev/jumps.hpp"
#include "meandev/market.hpp"

namespace meandev::cli {

// Malformed or inconsistent configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& file, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct Numerics {
  std::size_t grid_size = 4096;
  double tol = 1e-10;
  int max_iter = 10000;
  double damping = 0.5;
  FixedPointMethod method = FixedPointMethod::Jacobi;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 42;
  unsigned workers = 0;
  double alpha = 0.05;
  std::size_t mc_samples = 20000;
  std::vector<int> levels{2, 4, 6, 8, 10};
  std::size_t sim_steps = 64;
  std::vector<double> hjb_x{1.0};
};

struct ValidateBlock {
  std::vector<Vector> heads;   // empty: zero and the half-invested equal split
  std::vector<double> times;   // empty: t* + eps, (t* + T) / 2, T - h
  double h = 0.0;              // 0: T / 64
};

struct RunConfig {
  std::string path;
  nlohmann::json resolved;
  LevyMeasure measure{1};
  std::optional<MarketModel> market;
  std::optional<Driver> driver;
  bool has_problem = false;
  double gamma = 0.0;
  double horizon = 0.0;
  double x0 = 1.0;
  Numerics numerics;
  std::optional<RepresentingPair> pair;
  std::optional<Policy> policy;
  ValidateBlock validate;
  std::string output_dir = "meandev-out";

  // Blocks a subcommand cannot run without.
  void require_market() const;
  void require_driver() const;
  void require_problem() const;
  void require_pair() const;
};

// Reads the file, applies dotted key=value overrides (values parsed as JSON,
// falling back to strings), validates every block, and builds the model objects.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

}  // namespace meandev::cli
