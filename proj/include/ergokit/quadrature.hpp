#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ergokit {

/// Gauss-Legendre nodes and weights on [-1, 1], ascending nodes.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t order() const noexcept { return nodes.size(); }
};

/// Cached; safe to call concurrently.
const GaussLegendreRule& gauss_legendre(std::size_t order);

/// Integral of f over [a, b] with `panels` equal composite panels.
double integrate(const std::function<double(double)>& f, double a, double b, std::size_t order,
                 std::size_t panels = 1);

/// Integral of f over [a, b] with geometrically graded panels toward the
/// ends flagged in `grade_left` / `grade_right`. Handles integrable endpoint
/// singularities (log, inverse square root) without evaluating at the ends.
double integrate_graded(const std::function<double(double)>& f, double a, double b,
                        std::size_t order, bool grade_left, bool grade_right);

/// P_0(t) .. P_K(t) into out (size K+1).
void legendre_values(double t, std::span<double> out);

/// Integral over [-1, t] of P_k, for k = 0 .. K.
void legendre_integrals(double t, std::span<double> out);

}  // namespace ergokit
