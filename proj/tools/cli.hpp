#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "run_config.hpp"

namespace ergokit::cli {

inline constexpr const char* kSchemaVersion = "1.0.0";

enum ExitCode : int { kSuccess = 0, kUsage = 1, kNotConverged = 2 };

/// Result of one command before serialization.
struct CommandOutput {
  nlohmann::ordered_json result;
  std::size_t iterations = 0;
  double residual = 0.0;
  /// Header line plus rows, without trailing newlines.
  std::vector<std::string> csv;
};

CommandOutput cmd_invariant(const RunConfig& config, const std::string& export_path = "");
CommandOutput cmd_memory(const RunConfig& config);
CommandOutput cmd_ergodic(const RunConfig& config, const std::string& export_path = "");
CommandOutput cmd_gap(const RunConfig& config, const std::string& export_path = "");
CommandOutput cmd_power(const RunConfig& config);

/// Full front end. args excludes the program name. Results go to `out` when
/// the output path is "-", errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ergokit::cli
