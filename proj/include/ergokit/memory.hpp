#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ergokit/maps.hpp"
#include "ergokit/noise.hpp"

namespace ergokit {

/// Discrete memoryless channel; row i is the law of the output given input i.
struct ChannelMatrix {
  Eigen::MatrixXd rows;

  /// Validates row-stochasticity (1e-12) and nonnegativity.
  static ChannelMatrix from_rows(Eigen::MatrixXd rows);

  std::size_t n_states() const noexcept { return static_cast<std::size_t>(rows.rows()); }
};

struct CapacityResult {
  double capacity_bits = 0.0;
  Eigen::VectorXd input_distribution;
  std::size_t iterations = 0;
  /// Upper bound max_i D(W_i || q) minus the achieved I at termination.
  double certified_slack = 0.0;
  /// I(mu_k; W) after every Blahut-Arimoto update, starting from uniform.
  std::vector<double> lower_bounds;
};

/// Conditional law of the next bin given the current state uniform on bin i:
/// the transpose of the Ulam matrix.
ChannelMatrix channel_matrix(const MapSpec& map, const NoiseKernel& kernel, std::size_t n_states,
                             std::size_t quad_order = 8);

/// I(X;Y) in bits for input law mu.
double mutual_information(const Eigen::VectorXd& mu, const ChannelMatrix& W);

/// Blahut-Arimoto. Stops when max_i D(W_i || q) - I(mu) <= tol; throws
/// NotConverged (carrying the slack) after max_iter updates.
CapacityResult capacity(const ChannelMatrix& W, double tol = 1e-6, std::size_t max_iter = 100000);

/// Capacity of W^k.
CapacityResult capacity_at_lag(const ChannelMatrix& W, std::size_t k, double tol = 1e-6,
                               std::size_t max_iter = 100000);

/// channel_matrix followed by capacity.
CapacityResult memory_of_system(const MapSpec& map, const NoiseKernel& kernel, std::size_t n_states,
                                double tol = 1e-6, std::size_t quad_order = 8, std::size_t max_iter = 100000);

/// max(64, ceil(16 / eps)).
std::size_t default_resolution(double epsilon);

struct ScalingRow {
  double epsilon = 0.0;
  std::size_t n_states = 0;
  double capacity_bits = 0.0;
  double certified_slack = 0.0;
  std::size_t iterations = 0;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  double slope = 0.0;
};

/// Least-squares slope of capacity (bits) against log2(1/eps).
double fit_log_slope(const std::vector<ScalingRow>& rows);

/// Memory at each eps in eps_list (kernel family and boundary from `kernel`,
/// epsilon overridden). Requires >= 4 values spanning >= 3 octaves.
ScalingResult memory_scaling(const MapSpec& map, const NoiseKernel& kernel, const std::vector<double>& eps_list,
                             const std::function<std::size_t(double)>& n_states_rule = default_resolution,
                             double tol = 1e-4);

}  // namespace ergokit
