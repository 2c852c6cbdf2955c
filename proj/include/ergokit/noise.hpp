#pragma once

#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ergokit {

enum class KernelFamily { UniformBall, Gaussian };

/// How mass leaving [0,1] is folded back: periodic images, mirror images,
/// or restriction followed by renormalization.
enum class Boundary { Wrap, Reflect, Renormalize };

/// Noise law p^eps_c around a center c. For UniformBall epsilon is the ball
/// radius; for Gaussian it is the standard deviation (not the variance).
struct NoiseKernel {
  KernelFamily family = KernelFamily::Gaussian;
  double epsilon = 0.05;
  Boundary boundary = Boundary::Wrap;
};

using Rng = std::mt19937_64;

/// Parses the `family:epsilon:boundary` micro-format, e.g. "gaussian:0.05:wrap".
/// The boundary part is optional (defaults to wrap). Throws InvalidArgument.
NoiseKernel parse_kernel(std::string_view text);
std::string describe(const NoiseKernel& k);
std::string_view family_name(KernelFamily f) noexcept;
std::string_view boundary_name(Boundary b) noexcept;

/// Boundary-adjusted density of p^eps_center at x.
double kernel_density(const NoiseKernel& k, double center, double x);

/// Mass of p^eps_center on [0, x].
double kernel_cdf(const NoiseKernel& k, double center, double x);

/// Mass of p^eps_center on [a, b].
double kernel_mass(const NoiseKernel& k, double center, double a, double b);

/// One draw from the boundary-adjusted kernel.
double kernel_sample(const NoiseKernel& k, double center, Rng& rng);

/// Differential entropy in bits of the unbounded kernel on the real line:
/// log2(2 eps) for the ball, 0.5*log2(2 pi e eps^2) for the Gaussian.
double kernel_entropy(const NoiseKernel& k);

/// Intervals of [0,1] outside of which the density is zero (or below 1e-18
/// of total mass for the Gaussian).
std::vector<std::pair<double, double>> kernel_support(const NoiseKernel& k, double center);

}  // namespace ergokit
