#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "ergokit/errors.hpp"
#include "ergokit/noise.hpp"
#include "oracles.hpp"

using namespace ergokit;

namespace {

NoiseKernel kernel(KernelFamily f, double eps, Boundary b) { return NoiseKernel{f, eps, b}; }

// Kinks and jumps of the density in [0,1], for splitting quadrature.
std::vector<double> density_breaks(const NoiseKernel& k, double c) {
  std::vector<double> out;
  for (double shift : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    for (double s : {c + shift, -c + shift}) {
      out.push_back(s);
      out.push_back(s - k.epsilon);
      out.push_back(s + k.epsilon);
    }
  }
  std::erase_if(out, [](double x) { return !(x > 0.0 && x < 1.0); });
  return out;
}

// chi-squared statistic of `draws` samples against the kernel's bin masses,
// pooling bins whose expected count is below 5.
void check_sampler(const NoiseKernel& k, double c, std::uint64_t seed) {
  const int bins = 100;
  const std::size_t draws = 1000000;
  Rng rng(seed);
  std::vector<double> counts(bins, 0.0);
  for (std::size_t i = 0; i < draws; ++i) {
    double x = kernel_sample(k, c, rng);
    REQUIRE(x >= 0.0);
    REQUIRE(x <= 1.0);
    counts[std::min(bins - 1, static_cast<int>(x * bins))] += 1.0;
  }
  double stat = 0.0, pooled_obs = 0.0, pooled_exp = 0.0;
  int cells = 0;
  for (int b = 0; b < bins; ++b) {
    double expected = static_cast<double>(draws) * kernel_mass(k, c, b / double(bins), (b + 1) / double(bins));
    if (expected < 5.0) {
      pooled_obs += counts[b];
      pooled_exp += expected;
      continue;
    }
    stat += (counts[b] - expected) * (counts[b] - expected) / expected;
    ++cells;
  }
  if (pooled_exp >= 5.0) {
    stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  } else {
    CHECK(pooled_obs <= 20.0);
  }
  boost::math::chi_squared dist(cells - 1);
  double critical = boost::math::quantile(dist, 1.0 - 0.001);
  CAPTURE(describe(k));
  CAPTURE(c);
  CHECK(stat <= critical);
}

}  // namespace

TEST_SUITE("noise") {

TEST_CASE("parse and describe kernels") {
  auto g = parse_kernel("gaussian:0.05:wrap");
  CHECK(g.family == KernelFamily::Gaussian);
  CHECK(g.epsilon == 0.05);
  CHECK(g.boundary == Boundary::Wrap);
  auto u = parse_kernel("uniform:0.1:reflect");
  CHECK(u.family == KernelFamily::UniformBall);
  CHECK(u.boundary == Boundary::Reflect);
  CHECK(parse_kernel("uniform-ball:0.2").boundary == Boundary::Wrap);
  CHECK(parse_kernel("gaussian:0.1:renormalize").boundary == Boundary::Renormalize);
  CHECK(describe(parse_kernel("gaussian:0.1")) == "gaussian:0.1:wrap");
  CHECK(parse_kernel(describe(u)).epsilon == u.epsilon);
  for (const char* bad : {"gauss:0.05", "gaussian", "gaussian:-1", "gaussian:0", "gaussian:abc",
                          "gaussian:0.1:torus", "uniform:0.1:wrap:extra", ""})
    CHECK_THROWS_AS(parse_kernel(bad), InvalidArgument);
}

TEST_CASE("density examples") {
  auto u = kernel(KernelFamily::UniformBall, 0.1, Boundary::Wrap);
  CHECK(kernel_density(u, 0.5, 0.55) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(kernel_density(u, 0.5, 0.75) == 0.0);

  auto g = kernel(KernelFamily::Gaussian, 0.05, Boundary::Wrap);
  const double series = oracle::wrapped_gaussian(0.05, 0.5, 0.5, 6);
  CHECK(std::fabs(series - 7.97885) <= 1e-5);
  CHECK(kernel_density(g, 0.5, 0.5) == doctest::Approx(series).epsilon(1e-13));
}

TEST_CASE("densities match image-sum oracles") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    double eps = 0.02 + 0.5 * unit(rng);
    double c = unit(rng), x = unit(rng);
    CHECK(kernel_density(kernel(KernelFamily::Gaussian, eps, Boundary::Wrap), c, x) ==
          doctest::Approx(oracle::wrapped_gaussian(eps, c, x, 8)).epsilon(1e-12));
    CHECK(kernel_density(kernel(KernelFamily::Gaussian, eps, Boundary::Reflect), c, x) ==
          doctest::Approx(oracle::reflected_gaussian(eps, c, x, 8)).epsilon(1e-12));
    double expect_u = oracle::wrapped_uniform(eps, c, x);
    double got_u = kernel_density(kernel(KernelFamily::UniformBall, eps, Boundary::Wrap), c, x);
    // skip points sitting on a jump
    if (std::fabs(std::fabs(x - c) - eps) > 1e-9 && std::fabs(std::fabs(x - c) - (1 - eps)) > 1e-9)
      CHECK(got_u == doctest::Approx(expect_u).epsilon(1e-12));
    // renormalize: restricted Gaussian over its mass on [0,1]
    double mass = oracle::normal_cdf((1 - c) / eps) - oracle::normal_cdf(-c / eps);
    CHECK(kernel_density(kernel(KernelFamily::Gaussian, eps, Boundary::Renormalize), c, x) ==
          doctest::Approx(oracle::normal_pdf((x - c) / eps) / eps / mass).epsilon(1e-12));
  }
}

TEST_CASE("cdf examples") {
  for (auto f : {KernelFamily::Gaussian, KernelFamily::UniformBall})
    for (auto b : {Boundary::Wrap, Boundary::Reflect, Boundary::Renormalize})
      for (double c : {0.0, 0.3, 0.97, 1.0})
        CHECK(std::fabs(kernel_cdf(kernel(f, 0.1, b), c, 1.0) - 1.0) <= 1e-10);
  CHECK(kernel_cdf(kernel(KernelFamily::UniformBall, 0.1, Boundary::Wrap), 0.5, 0.5) ==
        doctest::Approx(0.5).epsilon(1e-14));

  const double restricted = (oracle::normal_cdf(1.0) - oracle::normal_cdf(0.0)) /
                            (oracle::normal_cdf(10.0) - oracle::normal_cdf(0.0));
  CHECK(std::fabs(restricted - 0.682689) <= 1e-6);
  CHECK(kernel_cdf(kernel(KernelFamily::Gaussian, 0.1, Boundary::Renormalize), 0.0, 0.1) ==
        doctest::Approx(restricted).epsilon(1e-12));
  CHECK(kernel_cdf(kernel(KernelFamily::Gaussian, 0.1, Boundary::Wrap), 0.3, 0.0) == 0.0);
  CHECK(kernel_mass(kernel(KernelFamily::Gaussian, 0.1, Boundary::Wrap), 0.3, 0.2, 0.4) ==
        doctest::Approx(oracle::normal_cdf(1.0) - oracle::normal_cdf(-1.0)).epsilon(1e-12));
}

TEST_CASE("normalization over 100 random kernels by adaptive quadrature") {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    auto f = unit(rng) < 0.5 ? KernelFamily::Gaussian : KernelFamily::UniformBall;
    auto b = static_cast<Boundary>(static_cast<int>(unit(rng) * 3.0));
    double eps = 0.01 + 0.6 * unit(rng);
    double c = unit(rng);
    NoiseKernel k{f, eps, b};
    CAPTURE(describe(k));
    CAPTURE(c);
    double total = oracle::simpson_split([&](double x) { return kernel_density(k, c, x); }, 0.0, 1.0,
                                         density_breaks(k, c), 1e-12);
    CHECK(std::fabs(total - 1.0) <= 1e-9);
  }
}

TEST_CASE("cdf differentiates to the density") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  const double h = 1e-5;
  for (auto b : {Boundary::Wrap, Boundary::Reflect, Boundary::Renormalize}) {
    for (int i = 0; i < 50; ++i) {
      NoiseKernel k{KernelFamily::Gaussian, 0.03 + 0.2 * unit(rng), b};
      double c = unit(rng), x = unit(rng);
      double fd = (kernel_cdf(k, c, x + h) - kernel_cdf(k, c, x - h)) / (2 * h);
      double d = kernel_density(k, c, x);
      CHECK(std::fabs(fd - d) <= 1e-5 * std::max(1.0, d));
    }
    NoiseKernel u{KernelFamily::UniformBall, 0.1, b};
    // interior of the ball, away from the jumps at c +- eps
    for (double x : {0.45, 0.52, 0.58}) {
      double fd = (kernel_cdf(u, 0.5, x + h) - kernel_cdf(u, 0.5, x - h)) / (2 * h);
      CHECK(fd == doctest::Approx(kernel_density(u, 0.5, x)).epsilon(1e-8));
    }
  }
}

TEST_CASE("sampling support and determinism") {
  Rng rng(1);
  auto u = kernel(KernelFamily::UniformBall, 0.1, Boundary::Wrap);
  for (int i = 0; i < 100000; ++i) {
    double x = kernel_sample(u, 0.5, rng);
    REQUIRE(x >= 0.4);
    REQUIRE(x <= 0.6);
  }
  auto g = kernel(KernelFamily::Gaussian, 0.05, Boundary::Reflect);
  for (int i = 0; i < 100000; ++i) {
    double x = kernel_sample(g, 0.0, rng);
    REQUIRE(x >= 0.0);
    REQUIRE(x <= 1.0);
  }
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(kernel_sample(u, 0.3, a) == kernel_sample(u, 0.3, b));
}

TEST_CASE("sampler passes chi-squared against the density") {
  check_sampler(kernel(KernelFamily::UniformBall, 0.1, Boundary::Wrap), 0.5, 11);
  check_sampler(kernel(KernelFamily::UniformBall, 0.1, Boundary::Wrap), 0.04, 12);
  check_sampler(kernel(KernelFamily::UniformBall, 0.2, Boundary::Reflect), 0.9, 13);
  check_sampler(kernel(KernelFamily::UniformBall, 0.2, Boundary::Renormalize), 0.05, 14);
  check_sampler(kernel(KernelFamily::Gaussian, 0.05, Boundary::Reflect), 0.0, 15);
  check_sampler(kernel(KernelFamily::Gaussian, 0.1, Boundary::Wrap), 0.95, 16);
  check_sampler(kernel(KernelFamily::Gaussian, 0.3, Boundary::Renormalize), 0.1, 17);
}

TEST_CASE("entropy") {
  CHECK(kernel_entropy(kernel(KernelFamily::UniformBall, 0.25, Boundary::Wrap)) == doctest::Approx(-1.0));
  CHECK(kernel_entropy(kernel(KernelFamily::UniformBall, 0.5, Boundary::Wrap)) == doctest::Approx(0.0));

  const double eps = 0.1;
  auto integrand = [&](double x) {
    double f = oracle::normal_pdf(x / eps) / eps;
    return f > 0.0 ? -f * std::log2(f) : 0.0;
  };
  double quadrature = oracle::simpson(integrand, -8 * eps, 8 * eps, 1e-12);
  CHECK(std::fabs(quadrature - (-1.2749)) <= 1e-3);
  CHECK(std::fabs(kernel_entropy(kernel(KernelFamily::Gaussian, eps, Boundary::Wrap)) - quadrature) <= 1e-3);

  for (auto f : {KernelFamily::UniformBall, KernelFamily::Gaussian}) {
    double previous = -INFINITY;
    for (int e = 8; e >= 2; --e) {
      double h = kernel_entropy(kernel(f, std::ldexp(1.0, -e), Boundary::Wrap));
      CHECK(h > previous);
      previous = h;
    }
  }
}

TEST_CASE("support intervals carry all the mass") {
  for (auto f : {KernelFamily::Gaussian, KernelFamily::UniformBall})
    for (auto b : {Boundary::Wrap, Boundary::Reflect, Boundary::Renormalize})
      for (double c : {0.0, 0.02, 0.5, 0.99}) {
        NoiseKernel k{f, 0.05, b};
        double inside = 0.0;
        for (auto [lo, hi] : kernel_support(k, c)) inside += kernel_mass(k, c, lo, hi);
        CHECK(inside == doctest::Approx(1.0).epsilon(1e-12));
      }
}

}  // TEST_SUITE
