#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ergokit/maps.hpp"
#include "ergokit/noise.hpp"
#include "ergokit/transfer.hpp"

namespace ergokit {

struct StationaryResult {
  Eigen::VectorXd density;
  Representation representation = Representation::Ulam;
  double residual = 0.0;
  std::size_t iterations = 0;
  /// 1 - (ratio of the last two residuals), when at least two steps were taken.
  std::optional<double> gap_estimate;
};

/// Solver residual: L1 norm for Ulam vectors, h * sum|c| for piecewise
/// coefficients (an upper bound on the L1 norm of the represented function).
double residual_norm(const TransferMatrix& P, const Eigen::VectorXd& v);

/// Iterates rho <- P rho (renormalized) until ||P rho - rho|| <= tol.
/// Throws NotConverged after max_iter steps.
StationaryResult power_iterate(const TransferMatrix& P, const Eigen::VectorXd& init, double tol,
                               std::size_t max_iter = 100000);
/// Starts from the uniform (Ulam) or constant (piecewise) density.
StationaryResult power_iterate(const TransferMatrix& P, double tol, std::size_t max_iter = 100000);

GridDensity as_grid(const StationaryResult& result);
PiecewisePolyDensity as_piecewise(const StationaryResult& result, const TransferMatrix& P);

/// 1 - |lambda_2|, lambda_2 being the largest eigenvalue on the kernel of the
/// mass functional, by block power iteration with Rayleigh-Ritz extraction.
/// If the iteration has not settled after 1000 steps and P has at most 512
/// states, the answer comes from a dense eigenvalue solve instead.
double spectral_gap(const TransferMatrix& P, double tol = 1e-10, std::size_t max_iter = 100000);

/// Dobrushin overlap min over grid pairs of the integral of
/// min(q(T(x),.), q(T(x'),.)). The spectral gap of the noisy operator is at
/// least this value.
double doeblin_lower_bound(const MapSpec& map, const NoiseKernel& kernel, std::size_t grid = 64);

struct ErgodicComponent {
  std::vector<std::size_t> states;  // ascending bin indices
  Eigen::VectorXd density;          // stationary masses, aligned with states
  double residual = 0.0;

  /// Full-length mass vector (zeros outside the component).
  Eigen::VectorXd embed(Eigen::Index n) const;
};

struct ErgodicDecomposition {
  std::vector<ErgodicComponent> components;
  double threshold = 0.0;
};

/// Closed communicating classes of the support graph i -> j iff
/// P(j, i) > support_threshold (entries below 1e-14 count as zero).
ErgodicDecomposition ergodic_components(const TransferMatrix& P, double support_threshold = 0.0);

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Dyadic approximation of mu[a, b] within delta/2 of the mass the density
/// assigns to [a, b]. Throws ResolutionTooCoarse when the density's own error
/// (its error_bound plus the mass of partially covered end bins) exceeds delta/2.
Rational measure_query(const GridDensity& rho, Rational a, Rational b, Rational delta);
Rational measure_query(const GridDensity& rho, double a, double b, double delta);
Rational measure_query(const PiecewisePolyDensity& rho, double a, double b, double delta,
                       double error_bound = 0.0);

struct MixingResult {
  std::size_t steps = 0;
  double gap = 0.0;
  /// ln(1/target) / gap.
  double gap_bound_steps = 0.0;
  std::size_t first_state = 0;
  std::size_t second_state = 0;
};

/// Smallest t with TV(P^t e_i, P^t e_j) <= target for the pair of states whose
/// one-step distributions are farthest apart in total variation.
/// Throws NotMixing for reducible or periodic chains.
MixingResult mixing_time(const TransferMatrix& P, double target);

/// Integral of ln|T'(x)| rho(x) dx (nats). Intervals of half-width 1e-8 around
/// the map's non-smooth points (and `extra_singular`) are excluded.
double lyapunov_exponent(const MapSpec& map, const GridDensity& rho, std::size_t quad_order = 8,
                         const std::vector<double>& extra_singular = {});
double lyapunov_exponent(const MapSpec& map, const std::function<double(double)>& density,
                         std::size_t quad_order = 8, const std::vector<double>& extra_singular = {});

}  // namespace ergokit
