#include "ergokit/quadrature.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "ergokit/errors.hpp"

namespace ergokit {
namespace {

GaussLegendreRule compute_rule(std::size_t n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guess.
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / static_cast<double>(j);
      }
      dp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(std::size_t order) {
  if (order < 1) throw InvalidArgument("quadrature order must be at least 1");
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussLegendreRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussLegendreRule>(compute_rule(order));
  return *slot;
}

double integrate(const std::function<double(double)>& f, double a, double b, std::size_t order,
                 std::size_t panels) {
  const auto& rule = gauss_legendre(order);
  double width = (b - a) / static_cast<double>(panels);
  double sum = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    double mid = a + (static_cast<double>(p) + 0.5) * width;
    double part = 0.0;
    for (std::size_t i = 0; i < rule.order(); ++i) part += rule.weights[i] * f(mid + 0.5 * width * rule.nodes[i]);
    sum += 0.5 * width * part;
  }
  return sum;
}

double integrate_graded(const std::function<double(double)>& f, double a, double b,
                        std::size_t order, bool grade_left, bool grade_right) {
  if (!(b > a)) return 0.0;
  if (!grade_left && !grade_right) return integrate(f, a, b, order);
  constexpr int kLevels = 48;
  constexpr double kRatio = 0.5;
  auto graded = [&](double end, double inner, double sign) {
    // Panels [end + sign*w*r^(k+1), end + sign*w*r^k] for k = 0..kLevels-1,
    // plus the innermost panel touching the end.
    double w = std::fabs(inner - end);
    double sum = 0.0;
    double outer = w;
    // Below this width the nodes collide with `end` in floating point; the
    // innermost panel is dropped rather than evaluated at the singularity.
    const double floor_width = 64.0 * std::numeric_limits<double>::epsilon() * std::fabs(end);
    for (int k = 0; k < kLevels; ++k) {
      double near = outer * kRatio;
      if (near < floor_width) return sum + (sign > 0 ? integrate(f, end + sign * near, end + sign * outer, order)
                                                     : integrate(f, end + sign * outer, end + sign * near, order));
      double lo = end + sign * near;
      double hi = end + sign * outer;
      sum += sign > 0 ? integrate(f, lo, hi, order) : integrate(f, hi, lo, order);
      outer = near;
    }
    double lo = end;
    double hi = end + sign * outer;
    sum += sign > 0 ? integrate(f, lo, hi, order) : integrate(f, hi, lo, order);
    return sum;
  };
  if (grade_left && grade_right) {
    double mid = 0.5 * (a + b);
    return graded(a, mid, 1.0) + graded(b, mid, -1.0);
  }
  if (grade_left) return graded(a, b, 1.0);
  return graded(b, a, -1.0);
}

void legendre_values(double t, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() > 1) out[1] = t;
  for (std::size_t k = 2; k < out.size(); ++k)
    out[k] = ((2.0 * k - 1.0) * t * out[k - 1] - (k - 1.0) * out[k - 2]) / static_cast<double>(k);
}

void legendre_integrals(double t, std::span<double> out) {
  // int_{-1}^t P_k = (P_{k+1}(t) - P_{k-1}(t)) / (2k+1) for k >= 1.
  std::vector<double> p(out.size() + 1);
  legendre_values(t, p);
  if (out.empty()) return;
  out[0] = t + 1.0;
  for (std::size_t k = 1; k < out.size(); ++k) out[k] = (p[k + 1] - p[k - 1]) / (2.0 * k + 1.0);
}

}  // namespace ergokit
