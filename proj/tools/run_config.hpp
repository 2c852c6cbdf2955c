#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergokit/maps.hpp"

namespace ergokit::cli {

/// Bad flag or config value; the CLI exits with status 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything that determines a run. Output locations are not part of it, so
/// the echo in a result file is the same wherever the file was written.
struct RunConfig {
  std::string command;
  std::string map = "logistic";
  Parameters params;
  bool clamp = false;
  std::string kernel = "gaussian:0.05:wrap";
  std::size_t bins = 256;
  std::optional<double> piece_width;
  std::size_t terms = 8;
  std::size_t quad_order = 8;
  std::optional<double> tol;
  std::size_t max_iter = 100000;
  std::uint64_t seed = 1;
  std::string format = "json";

  // invariant
  double mixing_target = 0.25;
  std::size_t mc_steps = 0;
  // memory
  std::vector<double> eps;
  std::optional<std::size_t> n_states;
  // ergodic
  double threshold = 0.0;
  // gap
  std::size_t doeblin_grid = 64;
  // power
  std::string power = "2^40";
  int n_bits = 16;
  std::optional<double> gamma;

  /// The tolerance actually used: `tol` or the command's default.
  double resolved_tol() const;
};

nlohmann::ordered_json to_json(const RunConfig& c);
/// Overwrites the fields present in `j`; unknown keys are a UsageError.
void merge_json(RunConfig& c, const nlohmann::json& j);

/// "0.125" or "2^-3".
double parse_epsilon(const std::string& text);
/// "name=value".
std::pair<std::string, double> parse_param(const std::string& text);

}  // namespace ergokit::cli
