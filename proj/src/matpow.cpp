#include "ergokit/matpow.hpp"

#include <algorithm>
#include <cctype>
#include <numbers>

namespace ergokit {
namespace {

constexpr std::size_t kCertificateSamples = 10000;

// Chebyshev coefficients of x^d: 2^(1-d) * binom(d, (d-k)/2) for k = d, d-2, ...,
// with the k = 0 term halved.
std::vector<double> monomial_coefficients(std::size_t d) {
  std::vector<double> c(d + 1, 0.0);
  if (d == 0) {
    c[0] = 1.0;
    return c;
  }
  // log-space binomials keep large degrees finite.
  const double log_scale = (1.0 - static_cast<double>(d)) * std::numbers::ln2;
  for (std::size_t j = 0; 2 * j <= d; ++j) {
    std::size_t k = d - 2 * j;
    double log_binom = std::lgamma(static_cast<double>(d) + 1.0) - std::lgamma(static_cast<double>(j) + 1.0) -
                       std::lgamma(static_cast<double>(d - j) + 1.0);
    double value = std::exp(log_scale + log_binom);
    c[k] = k == 0 ? 0.5 * value : value;
  }
  return c;
}

double two_pow(int e) { return std::ldexp(1.0, e); }

}  // namespace

BigCount parse_count(std::string_view text) {
  auto digits_only = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  };
  if (auto caret = text.find('^'); caret != std::string_view::npos) {
    std::string_view base = text.substr(0, caret);
    std::string_view exp = text.substr(caret + 1);
    if (base != "2" || !digits_only(exp) || exp.size() > 6)
      throw InvalidArgument("power must be a decimal integer or 2^k, got '" + std::string(text) + "'");
    BigCount one = 1;
    return one << std::stoul(std::string(exp));
  }
  if (!digits_only(text)) throw InvalidArgument("power must be a decimal integer or 2^k, got '" + std::string(text) + "'");
  return BigCount(std::string(text));
}

BigCount minimum_power(double gamma, int n_bits) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("gap must lie in (0, 1]");
  double t = std::ceil((n_bits + 1) * std::numbers::ln2 / gamma);
  return BigCount(static_cast<long long>(t));
}

std::size_t amplifier_degree(double gamma, int n_bits) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("gap must lie in (0, 1]");
  return static_cast<std::size_t>(std::ceil((n_bits + 2) * std::numbers::ln2 / std::sqrt(2.0 * gamma)));
}

double PowerPolynomial::evaluate(double x) const {
  // Clenshaw on sum c_k T_k(y), y = x / scale.
  const double y = x / scale;
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = degree; k >= 1; --k) {
    double b0 = coeffs[k] + 2.0 * y * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return coeffs[0] + y * b1 - b2;
}

PowerPolynomial build_power_polynomial(double gamma, const BigCount& T, int n_bits) {
  if (n_bits < 1) throw InvalidArgument("n must be at least 1 bit");
  const BigCount t_min = minimum_power(gamma, n_bits);
  if (T < t_min)
    throw PowerTooSmall("PowerTooSmall: T=" + T.str() + " is below T_min=" + t_min.str() +
                        "; use power_by_squaring directly");

  PowerPolynomial p;
  p.gamma = gamma;
  p.rho = 1.0 - gamma;
  p.T = T;
  p.n_bits = n_bits;
  p.degree = amplifier_degree(gamma, n_bits);
  if (p.rho > 0.0) {
    p.scale = p.rho;
    p.coeffs.assign(p.degree + 1, 0.0);
    p.coeffs[p.degree] = 1.0 / std::cosh(static_cast<double>(p.degree) * std::acosh(1.0 / p.rho));
  } else {
    p.scale = 1.0;
    p.coeffs = monomial_coefficients(p.degree);
  }

  bool ok = std::fabs(p.evaluate(1.0) - 1.0) <= two_pow(-(n_bits + 2));
  double worst = 0.0;
  for (std::size_t s = 0; s < kCertificateSamples; ++s) {
    double x = -p.rho + 2.0 * p.rho * static_cast<double>(s) / static_cast<double>(kCertificateSamples - 1);
    worst = std::max(worst, std::fabs(p.evaluate(x)));
  }
  p.sampled_max = worst;
  ok = ok && worst <= two_pow(-(n_bits + 1));
  // max |x^T| on [-rho, rho] is rho^T.
  if (p.rho > 0.0) {
    double log_power = static_cast<double>(T) * std::log(p.rho);
    ok = ok && log_power <= -(n_bits + 1) * std::numbers::ln2;
  }
  if (!ok) throw CertificateFailed("scalar certificate failed for gamma=" + std::to_string(gamma));
  p.certified = true;
  return p;
}

Eigen::VectorXd apply_power_polynomial(const PowerPolynomial& p, const MatVec& matvec, const Eigen::VectorXd& v) {
  if (!p.certified) throw CertificateFailed("apply_power_polynomial needs a certified polynomial");
  const double inv_scale = 1.0 / p.scale;
  Eigen::VectorXd b1 = Eigen::VectorXd::Zero(v.size());
  Eigen::VectorXd b2 = Eigen::VectorXd::Zero(v.size());
  Eigen::VectorXd tmp(v.size());
  for (std::size_t k = p.degree; k >= 1; --k) {
    matvec(b1, tmp);
    if (tmp.size() != v.size()) throw DimensionMismatch("matvec returned a vector of the wrong size");
    tmp = 2.0 * inv_scale * tmp - b2 + p.coeffs[k] * v;
    b2.swap(b1);
    b1.swap(tmp);
  }
  matvec(b1, tmp);
  tmp *= inv_scale;
  tmp += p.coeffs[0] * v - b2;
  return tmp;
}

}  // namespace ergokit
