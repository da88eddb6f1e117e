#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace meandev::cli {

// Exit codes: 0 success, 1 validation or numeric failure, 2 usage or config error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// `meandev <subcommand> config.json [key=value ...]`
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Dispatch after argument parsing; subcommand is one of deviation, policy,
// simulate, validate, hjb-check, convergence.
int run(const std::string& subcommand, const std::string& config_path, const std::vector<std::string>& overrides,
        std::ostream& out, std::ostream& err);

}  // namespace meandev::cli
