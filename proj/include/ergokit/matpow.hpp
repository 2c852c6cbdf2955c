#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "ergokit/errors.hpp"
#include "ergokit/log.hpp"

namespace ergokit {

/// Exponents such as T ~ 2^D do not fit in 64 bits.
using BigCount = boost::multiprecision::cpp_int;

/// Parses a decimal integer or a power of two written "2^k".
BigCount parse_count(std::string_view text);

/// ceil((n + 1) ln 2 / gamma): the smallest T with (1 - gamma)^T <= 2^-(n+1).
BigCount minimum_power(double gamma, int n_bits);

/// ceil((n + 2) ln 2 / sqrt(2 gamma)).
std::size_t amplifier_degree(double gamma, int n_bits);

/// p(x) = sum_k coeffs[k] T_k(x / scale), a normalized Chebyshev amplifier:
/// p(1) = 1 and |p| <= 2^-(n+1) on [-rho, rho], rho = 1 - gamma. For rho = 0
/// the amplifier degenerates to x^d (scale 1).
struct PowerPolynomial {
  std::size_t degree = 0;
  std::vector<double> coeffs;
  double scale = 1.0;
  double rho = 0.0;
  double gamma = 1.0;
  BigCount T = 0;
  int n_bits = 0;
  bool certified = false;
  /// Largest |p(x)| seen on the certificate's sample grid.
  double sampled_max = 0.0;

  double evaluate(double x) const;
};

/// Throws PowerTooSmall when T < minimum_power(gamma, n) and
/// CertificateFailed when the sampled scalar certificate does not hold.
PowerPolynomial build_power_polynomial(double gamma, const BigCount& T, int n_bits);

/// out = M * in, with `out` pre-sized. The callee may recompute entries on
/// every call; nothing else about M is needed.
using MatVec = std::function<void(const Eigen::VectorXd& in, Eigen::VectorXd& out)>;

/// p(M) v by the Clenshaw recurrence. Working storage is three length-D
/// vectors plus the returned one.
Eigen::VectorXd apply_power_polynomial(const PowerPolynomial& p, const MatVec& matvec, const Eigen::VectorXd& v);

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_power_polynomial(
    const PowerPolynomial& p, const Eigen::MatrixBase<Derived>& M,
    const Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>& v) {
  using Scalar = typename Derived::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (M.rows() != M.cols() || M.cols() != v.size())
    throw DimensionMismatch("apply_power_polynomial: matrix and vector sizes differ");
  if (!p.certified) throw CertificateFailed("apply_power_polynomial needs a certified polynomial");
  const Scalar inv_scale = Scalar(1) / Scalar(p.scale);
  Vector b1 = Vector::Zero(v.size());
  Vector b2 = Vector::Zero(v.size());
  Vector tmp(v.size());
  for (std::size_t k = p.degree; k >= 1; --k) {
    tmp.noalias() = M * b1;
    tmp = Scalar(2) * inv_scale * tmp - b2 + Scalar(p.coeffs[k]) * v;
    b2.swap(b1);
    b1.swap(tmp);
  }
  tmp.noalias() = M * b1;
  return Scalar(p.coeffs[0]) * v + inv_scale * tmp - b2;
}

/// M^T by binary exponentiation in the matrix's scalar type. Column-stochastic
/// inputs (sums within 1e-12) are renormalized after every product: left
/// alone, rounding drift in the column sums doubles with each squaring and
/// reaches ~1e-4 by T = 2^40.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> power_by_squaring(
    const Eigen::MatrixBase<Derived>& M, const BigCount& T) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (M.rows() != M.cols()) throw DimensionMismatch("power_by_squaring needs a square matrix");
  if (T < 0) throw InvalidArgument("power_by_squaring needs T >= 0");
  const bool stochastic = M.size() > 0 && (M.array() >= Scalar(0)).all() &&
                          (M.colwise().sum().array() - Scalar(1)).abs().maxCoeff() <= Scalar(1e-12);
  auto renormalize = [&](Matrix& A) {
    if (!stochastic) return;
    A.array().rowwise() /= A.colwise().sum().array();
  };
  Matrix result = Matrix::Identity(M.rows(), M.cols());
  Matrix base = M;
  const auto bits = T == 0 ? 0U : static_cast<unsigned>(boost::multiprecision::msb(T)) + 1U;
  for (unsigned b = 0; b < bits; ++b) {
    if (boost::multiprecision::bit_test(T, b)) {
      result = result * base;
      renormalize(result);
    }
    if (b + 1 < bits) {
      base = base * base;
      renormalize(base);
    }
  }
  return result;
}

}  // namespace ergokit
