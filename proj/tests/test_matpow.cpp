#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ergokit/errors.hpp"
#include "ergokit/invariant.hpp"
#include "ergokit/matpow.hpp"
#include "ergokit/transfer.hpp"
#include "oracles.hpp"

using namespace ergokit;

namespace {

Eigen::Matrix2d two_state(double a, double b) {
  Eigen::Matrix2d M;
  M << 1 - a, b, a, 1 - b;
  return M;
}

BigCount pow2(unsigned k) { return BigCount(1) << k; }

}  // namespace

TEST_SUITE("matpow") {

TEST_CASE("parse_count") {
  CHECK(parse_count("12345") == 12345);
  CHECK(parse_count("2^40") == pow2(40));
  CHECK(parse_count("2^200") == pow2(200));
  CHECK_THROWS_AS(parse_count("2^x"), InvalidArgument);
  CHECK_THROWS_AS(parse_count("-3"), InvalidArgument);
  CHECK_THROWS_AS(parse_count(""), InvalidArgument);
}

TEST_CASE("power_by_squaring examples") {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(5, 5);
  CHECK(power_by_squaring(I, BigCount(1000000000)) == I);

  Eigen::MatrixXd M = two_state(0.25, 0.25);
  Eigen::MatrixXd P = power_by_squaring(M, BigCount(10));
  CHECK(P(0, 0) == doctest::Approx(0.5 + std::pow(0.5, 11)).epsilon(1e-15));
  CHECK(P(1, 0) == doctest::Approx(0.5 - std::pow(0.5, 11)).epsilon(1e-15));
  CHECK(power_by_squaring(M, BigCount(0)) == Eigen::MatrixXd::Identity(2, 2));

  Eigen::MatrixXd R = oracle::random_stochastic(16, 7);
  Eigen::MatrixXd big = power_by_squaring(R, pow2(20));
  CHECK((big.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);

  // non-stochastic input: plain products
  Eigen::Matrix2d A;
  A << 1, 1, 0, 1;
  Eigen::MatrixXd A7 = power_by_squaring(Eigen::MatrixXd(A), BigCount(7));
  CHECK(A7(0, 1) == 7.0);
  CHECK_THROWS_AS(power_by_squaring(Eigen::MatrixXd(2, 3), BigCount(2)), DimensionMismatch);
}

TEST_CASE("build_power_polynomial examples") {
  auto p1 = build_power_polynomial(1.0, BigCount(100), 20);
  CHECK(p1.degree == 11);
  CHECK(static_cast<std::size_t>(std::ceil(22 * std::log(2.0) / std::sqrt(2.0))) == 11);
  CHECK(p1.certified);
  CHECK(std::fabs(p1.evaluate(0.0)) <= std::ldexp(1.0, -21));
  CHECK(std::fabs(p1.evaluate(1.0) - 1.0) <= std::ldexp(1.0, -22));

  auto p2 = build_power_polynomial(0.5, BigCount(100), 20);
  CHECK(p2.degree == 16);
  CHECK(p2.certified);
  CHECK(p2.sampled_max <= std::ldexp(1.0, -21));

  CHECK(minimum_power(0.5, 20) == 30);
  CHECK_THROWS_AS(build_power_polynomial(0.5, BigCount(5), 20), PowerTooSmall);
  CHECK_NOTHROW(build_power_polynomial(0.5, BigCount(30), 20));
  CHECK_THROWS_AS(build_power_polynomial(0.0, BigCount(100), 20), InvalidArgument);
  CHECK_THROWS_AS(build_power_polynomial(1.5, BigCount(100), 20), InvalidArgument);
}

TEST_CASE("apply_power_polynomial examples") {
  // stationary vector is fixed
  Eigen::MatrixXd R = oracle::random_reversible(12, 3, 1.0);
  TransferMatrix P;
  P.entries = R;
  P.metadata.n_bins = 12;
  double gamma = spectral_gap(P);
  auto pi = power_iterate(P, 1e-15).density;
  auto p = build_power_polynomial(gamma, pow2(40), 16);
  CHECK((apply_power_polynomial(p, R, Eigen::VectorXd(pi)) - pi).lpNorm<Eigen::Infinity>() <= std::ldexp(1.0, -16));

  Eigen::MatrixXd M = two_state(0.25, 0.25);
  auto q = build_power_polynomial(0.5, pow2(30), 20);
  Eigen::VectorXd out = apply_power_polynomial(q, M, Eigen::VectorXd(Eigen::Vector2d(1, 0)));
  CHECK(std::fabs(out(0) - 0.5) <= std::ldexp(1.0, -20));
  CHECK(std::fabs(out(1) - 0.5) <= std::ldexp(1.0, -20));

  Eigen::MatrixXd big = oracle::random_reversible(32, 11, 6.0);
  double g = 1.0 - oracle::second_modulus(big);
  MESSAGE("seed 11 reversible 32x32 gap " << g);
  REQUIRE(g >= 0.3);
  auto r = build_power_polynomial(g, pow2(40), 16);
  Eigen::MatrixXd reference = power_by_squaring(big, pow2(40));
  double worst = 0.0;
  for (Eigen::Index c = 0; c < 32; ++c) {
    Eigen::VectorXd col = apply_power_polynomial(r, big, Eigen::VectorXd(Eigen::VectorXd::Unit(32, c)));
    worst = std::max(worst, (col - reference.col(c)).lpNorm<Eigen::Infinity>());
  }
  MESSAGE("max deviation " << worst);
  CHECK(worst <= std::ldexp(1.0, -16));

  CHECK_THROWS_AS(apply_power_polynomial(q, M, Eigen::VectorXd(Eigen::Vector3d(1, 0, 0))), DimensionMismatch);
}

TEST_CASE("property: scalar soundness") {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> ug(0.05, 1.0);
  std::uniform_int_distribution<int> un(4, 30);
  for (int trial = 0; trial < 10000; ++trial) {
    double gamma = ug(rng);
    int n = un(rng);
    BigCount T = 2 * minimum_power(gamma, n);
    auto p = build_power_polynomial(gamma, T, n);
    const double rho = 1.0 - gamma, Td = static_cast<double>(T);
    double worst = 0.0;
    for (int i = 0; i <= 200; ++i) {
      double x = -rho + 2.0 * rho * i / 200.0;
      double xt = x == 0.0 ? 0.0 : std::copysign(std::exp(Td * std::log(std::fabs(x))), x);
      worst = std::max(worst, std::fabs(p.evaluate(x) - xt));
    }
    if (worst > std::ldexp(1.0, -n)) {
      CAPTURE(gamma);
      CAPTURE(n);
      FAIL_CHECK("scalar bound violated: " << worst);
    }
  }
}

TEST_CASE("property: degree grows linearly in n and as gamma^-1/2") {
  for (double gamma : {0.01, 0.1, 0.5, 1.0}) {
    for (int n = 1; n <= 60; ++n) {
      double exact = (n + 2) * std::log(2.0) / std::sqrt(2.0 * gamma);
      auto d = static_cast<double>(amplifier_degree(gamma, n));
      CHECK(d >= exact);
      CHECK(d < exact + 1.0);
    }
  }
  // quadrupling 1/gamma doubles the degree up to rounding
  for (int n : {8, 16, 32}) {
    double d1 = static_cast<double>(amplifier_degree(0.4, n));
    double d4 = static_cast<double>(amplifier_degree(0.1, n));
    CHECK(std::fabs(d4 - 2.0 * d1) <= 2.0);
  }
}

TEST_CASE("property: oracle equivalence on reversible chains") {
  int cases = 0;
  for (std::uint64_t seed = 100; cases < 8; ++seed) {
    Eigen::Index D = 8 + static_cast<Eigen::Index>(seed % 5) * 12;
    Eigen::MatrixXd M = oracle::random_reversible(D, seed, 0.5 * static_cast<double>(D) / 8.0);
    double g = 1.0 - oracle::second_modulus(M);
    if (g < 0.3) continue;
    ++cases;
    auto p = build_power_polynomial(g, pow2(40), 16);
    Eigen::MatrixXd reference = power_by_squaring(M, pow2(40));
    Eigen::MatrixXd approx(D, D);
    for (Eigen::Index c = 0; c < D; ++c)
      approx.col(c) = apply_power_polynomial(p, M, Eigen::VectorXd(Eigen::VectorXd::Unit(D, c)));
    CAPTURE(seed);
    CHECK((approx - reference).cwiseAbs().maxCoeff() <= std::ldexp(1.0, -16));
  }
}

TEST_CASE("matrix-free application through UlamOperator") {
  auto map = MapSpec::builtin(MapSpec::Builtin::Logistic, {{"lambda", 4.0}});
  auto kernel = parse_kernel("gaussian:0.2:wrap");
  auto P = build_ulam(map, kernel, 48);
  UlamOperator op(map, kernel, 48);
  double g = spectral_gap(P);
  auto p = build_power_polynomial(g, pow2(40), 16);
  Eigen::VectorXd v = Eigen::VectorXd::Unit(48, 5);
  Eigen::VectorXd free = apply_power_polynomial(
      p, [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) { op.apply(in, out); }, v);
  Eigen::VectorXd dense = power_by_squaring(P.entries, pow2(40)) * v;
  CHECK((free - dense).lpNorm<Eigen::Infinity>() <= std::ldexp(1.0, -16));
}

}  // TEST_SUITE
