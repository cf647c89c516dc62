#pragma once

// Command-line front end: measure, certify, simulate and interconnect driven by a JSON config.

#include <json.hpp>

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace contraction::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode { success = 0, negative = 1, config_error = 2, numerical_error = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::string out_dir;  // empty: report on stdout only
  int threads = 1;
};

struct CommandResult {
  nlohmann::json report;
  int exit_code = success;
};

/// FNV-1a 64-bit hash, hex encoded.
std::string fnv1a_hex(const std::string& text);

/// Runs one command on a config. `config` is resolved in place (defaults filled in).
CommandResult run_command(const std::string& command, nlohmann::json& config, const RunOptions& options);

/// argv-level entry point used by the executable.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace contraction::cli
