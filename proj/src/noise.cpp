#include "ergokit/noise.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "ergokit/errors.hpp"

namespace ergokit {
namespace {

// Gaussian tails are dropped beyond this many standard deviations
// (Phi(-9) ~ 1e-19).
constexpr double kGaussianReach = 9.0;

double reach(const NoiseKernel& k) {
  return k.family == KernelFamily::Gaussian ? kGaussianReach * k.epsilon : k.epsilon;
}

// Density and CDF of the unbounded kernel centred at 0.
double base_density(const NoiseKernel& k, double z) {
  if (k.family == KernelFamily::UniformBall)
    return std::fabs(z) <= k.epsilon ? 0.5 / k.epsilon : 0.0;
  double u = z / k.epsilon;
  if (std::fabs(u) > 40.0) return 0.0;
  return std::exp(-0.5 * u * u) / (k.epsilon * std::sqrt(2.0 * std::numbers::pi));
}

double base_cdf(const NoiseKernel& k, double z) {
  if (k.family == KernelFamily::UniformBall)
    return std::clamp((z + k.epsilon) / (2.0 * k.epsilon), 0.0, 1.0);
  if (z <= -kGaussianReach * k.epsilon) return 0.0;
  if (z >= kGaussianReach * k.epsilon) return 1.0;
  return 0.5 * std::erfc(-z / (k.epsilon * std::numbers::sqrt2));
}

int wrap_images(const NoiseKernel& k) { return static_cast<int>(std::ceil(reach(k))) + 1; }
int reflect_images(const NoiseKernel& k) {
  return static_cast<int>(std::ceil(0.5 * (reach(k) + 1.0))) + 1;
}

void check_kernel(const NoiseKernel& k) {
  if (!(k.epsilon > 0.0) || !std::isfinite(k.epsilon))
    throw InvalidArgument("noise epsilon must be a positive finite number");
}

}  // namespace

std::string_view family_name(KernelFamily f) noexcept {
  return f == KernelFamily::Gaussian ? "gaussian" : "uniform";
}

std::string_view boundary_name(Boundary b) noexcept {
  switch (b) {
    case Boundary::Wrap: return "wrap";
    case Boundary::Reflect: return "reflect";
    case Boundary::Renormalize: return "renormalize";
  }
  return "?";
}

NoiseKernel parse_kernel(std::string_view text) {
  auto fail = [&](const std::string& why) -> NoiseKernel {
    throw InvalidArgument("invalid kernel '" + std::string(text) + "': " + why +
                          " (expected family:epsilon[:boundary], family gaussian|uniform, "
                          "boundary wrap|reflect|renormalize)");
  };
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    std::size_t colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string_view::npos ? colon : colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) return fail("wrong number of fields");

  NoiseKernel k;
  if (parts[0] == "gaussian")
    k.family = KernelFamily::Gaussian;
  else if (parts[0] == "uniform" || parts[0] == "uniform-ball")
    k.family = KernelFamily::UniformBall;
  else
    return fail("unknown family '" + std::string(parts[0]) + "'");

  try {
    std::size_t used = 0;
    std::string eps(parts[1]);
    k.epsilon = std::stod(eps, &used);
    if (used != eps.size()) return fail("bad epsilon");
  } catch (const std::exception&) {
    return fail("bad epsilon");
  }
  if (!(k.epsilon > 0.0) || !std::isfinite(k.epsilon)) return fail("epsilon must be positive");

  if (parts.size() == 3) {
    if (parts[2] == "wrap")
      k.boundary = Boundary::Wrap;
    else if (parts[2] == "reflect")
      k.boundary = Boundary::Reflect;
    else if (parts[2] == "renormalize")
      k.boundary = Boundary::Renormalize;
    else
      return fail("unknown boundary '" + std::string(parts[2]) + "'");
  }
  return k;
}

std::string describe(const NoiseKernel& k) {
  // Shortest text that reads back as the same double.
  char buf[64];
  auto end = std::to_chars(buf, buf + sizeof buf, k.epsilon).ptr;
  return std::string(family_name(k.family)) + ":" + std::string(buf, end) + ":" + std::string(boundary_name(k.boundary));
}

double kernel_density(const NoiseKernel& k, double center, double x) {
  check_kernel(k);
  if (x < 0.0 || x > 1.0) return 0.0;
  switch (k.boundary) {
    case Boundary::Wrap: {
      int n = wrap_images(k);
      double sum = 0.0;
      for (int i = -n; i <= n; ++i) sum += base_density(k, x - center + i);
      return sum;
    }
    case Boundary::Reflect: {
      int n = reflect_images(k);
      double sum = 0.0;
      for (int i = -n; i <= n; ++i)
        sum += base_density(k, x + 2.0 * i - center) + base_density(k, -x + 2.0 * i - center);
      return sum;
    }
    case Boundary::Renormalize: {
      double mass = base_cdf(k, 1.0 - center) - base_cdf(k, -center);
      return base_density(k, x - center) / mass;
    }
  }
  return 0.0;
}

double kernel_cdf(const NoiseKernel& k, double center, double x) {
  check_kernel(k);
  x = std::clamp(x, 0.0, 1.0);
  switch (k.boundary) {
    case Boundary::Wrap: {
      int n = wrap_images(k);
      double sum = 0.0;
      for (int i = -n; i <= n; ++i) sum += base_cdf(k, x - center + i) - base_cdf(k, i - center);
      return std::clamp(sum, 0.0, 1.0);
    }
    case Boundary::Reflect: {
      int n = reflect_images(k);
      double sum = 0.0;
      for (int i = -n; i <= n; ++i)
        sum += base_cdf(k, x + 2.0 * i - center) - base_cdf(k, 2.0 * i - center - x);
      return std::clamp(sum, 0.0, 1.0);
    }
    case Boundary::Renormalize: {
      double lo = base_cdf(k, -center);
      double mass = base_cdf(k, 1.0 - center) - lo;
      return std::clamp((base_cdf(k, x - center) - lo) / mass, 0.0, 1.0);
    }
  }
  return 0.0;
}

double kernel_mass(const NoiseKernel& k, double center, double a, double b) {
  return std::max(0.0, kernel_cdf(k, center, b) - kernel_cdf(k, center, a));
}

double kernel_sample(const NoiseKernel& k, double center, Rng& rng) {
  check_kernel(k);
  auto draw = [&] {
    if (k.family == KernelFamily::UniformBall)
      return center + std::uniform_real_distribution<double>(-k.epsilon, k.epsilon)(rng);
    return center + k.epsilon * std::normal_distribution<double>(0.0, 1.0)(rng);
  };
  switch (k.boundary) {
    case Boundary::Wrap: {
      double y = draw();
      y -= std::floor(y);
      return y >= 1.0 ? 0.0 : y;
    }
    case Boundary::Reflect: {
      double y = draw();
      y -= 2.0 * std::floor(0.5 * y);
      return y > 1.0 ? 2.0 - y : y;
    }
    case Boundary::Renormalize:
      for (;;) {
        double y = draw();
        if (y >= 0.0 && y <= 1.0) return y;
      }
  }
  return center;
}

double kernel_entropy(const NoiseKernel& k) {
  check_kernel(k);
  if (k.family == KernelFamily::UniformBall) return std::log2(2.0 * k.epsilon);
  return 0.5 * std::log2(2.0 * std::numbers::pi * std::numbers::e * k.epsilon * k.epsilon);
}

std::vector<std::pair<double, double>> kernel_support(const NoiseKernel& k, double center) {
  double r = reach(k);
  double lo = center - r;
  double hi = center + r;
  switch (k.boundary) {
    case Boundary::Wrap:
      if (2.0 * r >= 1.0) return {{0.0, 1.0}};
      if (lo < 0.0) return {{0.0, hi}, {1.0 + lo, 1.0}};
      if (hi > 1.0) return {{0.0, hi - 1.0}, {lo, 1.0}};
      return {{lo, hi}};
    case Boundary::Reflect:
      if (r >= 1.0) return {{0.0, 1.0}};
      return {{std::max(lo, 0.0), std::min(hi, 1.0)}};
    case Boundary::Renormalize:
      return {{std::max(lo, 0.0), std::min(hi, 1.0)}};
  }
  return {{0.0, 1.0}};
}

}  // namespace ergokit
