#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergokit/maps.hpp"
#include "ergokit/noise.hpp"
#include "ergokit/quadrature.hpp"

namespace ergokit {

/// Probability masses of the equal-width bins [j/n, (j+1)/n).
struct GridDensity {
  Eigen::VectorXd masses;
  /// L1 error bound carried from the solver that produced the masses
  /// (0 when unknown or exact).
  double error_bound = 0.0;

  static GridDensity uniform(std::size_t n_bins);

  std::size_t n_bins() const noexcept { return static_cast<std::size_t>(masses.size()); }
  double bin_width() const noexcept { return 1.0 / static_cast<double>(masses.size()); }
  /// Piecewise-constant density value at x.
  double density(double x) const;
  /// Exact integral of the piecewise-constant density over [a, b].
  double mass(double a, double b) const;
};

/// Density represented on `pieces` equal pieces of [0,1], each carrying the
/// coefficients of a degree-(terms-1) expansion in Legendre polynomials
/// mapped to the piece. Coefficient (p, k) lives at index p*terms + k.
struct PiecewisePolyDensity {
  std::size_t pieces = 0;
  std::size_t terms = 0;
  Eigen::VectorXd coeffs;

  static PiecewisePolyDensity constant(std::size_t pieces, std::size_t terms);

  double piece_width() const noexcept { return 1.0 / static_cast<double>(pieces); }
  double evaluate(double y) const;
  double integral(double a, double b) const;
  double total() const { return integral(0.0, 1.0); }
  /// Masses of n equal bins, integrated exactly.
  Eigen::VectorXd bin_masses(std::size_t n_bins) const;
};

enum class Representation { Ulam, PiecewisePoly };

struct TransferMetadata {
  std::string map_id;
  std::string kernel;
  double epsilon = 0.0;
  std::size_t n_bins = 0;   // Ulam
  std::size_t pieces = 0;   // piecewise-poly
  std::size_t degree = 0;   // piecewise-poly: K (terms per piece = K+1)
  std::size_t quad_order = 0;
  std::vector<std::string> warnings;
};

/// Discretized noisy transfer operator acting on column vectors: rho' = P rho.
struct TransferMatrix {
  Eigen::MatrixXd entries;
  Representation representation = Representation::Ulam;
  TransferMetadata metadata;
  bool stochastic = true;

  Eigen::Index dim() const noexcept { return entries.rows(); }
  /// Linear functional giving total mass of a vector in this representation.
  Eigen::VectorXd mass_functional() const;
};

/// Ulam discretization on n_bins equal bins. Entry (j, i) is the average
/// over x in bin i of the kernel mass of bin j around T(x), using
/// Gauss-Legendre of order quad_order on each source bin.
TransferMatrix build_ulam(const MapSpec& map, const NoiseKernel& kernel, std::size_t n_bins,
                          std::size_t quad_order = 8);

/// Galerkin matrix of the noisy operator on piecewise Legendre expansions
/// (pieces of width ~piece_width, K+1 terms each). Gaussian noise only.
TransferMatrix build_piecewise(const MapSpec& map, const NoiseKernel& kernel, double piece_width,
                               std::size_t K, std::size_t quad_order = 8);

/// P * rho. Renormalizes (and logs) if total mass drifts by more than 1e-12.
Eigen::VectorXd apply(const TransferMatrix& P, const Eigen::VectorXd& rho);
GridDensity apply(const TransferMatrix& P, const GridDensity& rho);
PiecewisePolyDensity apply(const TransferMatrix& P, const PiecewisePolyDensity& rho);

/// Row-major CSV with '#'-prefixed metadata comment lines.
void write_matrix_csv(std::ostream& out, const TransferMatrix& P);

/// Matrix-free Ulam operator: entries are recomputed from the map and kernel
/// on every access, nothing of size n_bins^2 is stored.
class UlamOperator {
 public:
  UlamOperator(MapSpec map, NoiseKernel kernel, std::size_t n_bins, std::size_t quad_order = 8);

  Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(n_bins_); }
  double entry(std::size_t row, std::size_t col) const;
  /// out = P * in. `out` must already have size dim().
  void apply(const Eigen::VectorXd& in, Eigen::VectorXd& out) const;

 private:
  MapSpec map_;
  NoiseKernel kernel_;
  std::size_t n_bins_;
  std::size_t quad_order_;
};

}  // namespace ergokit
