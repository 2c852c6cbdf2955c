#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ergokit/expression.hpp"

namespace ergokit {

using Parameters = std::map<std::string, double, std::less<>>;

/// A deterministic map T: [0,1] -> [0,1], either one of the built-in families
/// or a parsed expression in x. Immutable once constructed.
///
/// Built-in parameters (defaults in parentheses):
///   logistic        lambda (4)            lambda*x*(1-x)
///   doubling        -                     2x mod 1
///   tent            mu (2)                mu*min(x, 1-x)
///   rotation        alpha (0.5*(sqrt5-1)) x + alpha mod 1
///   identity        -                     x
///   piecewise-const split (0.5), low (0.25), high (0.75)
///                                         low for x < split, high otherwise
class MapSpec {
 public:
  enum class Builtin { Logistic, Doubling, Tent, Rotation, Identity, PiecewiseConst };

  static MapSpec builtin(Builtin kind, const Parameters& params = {});
  static MapSpec from_expression(Expression expr, const Parameters& params = {}, bool clamp = false);
  /// Built-in name ("logistic", "doubling", ...) or a DSL expression.
  static MapSpec from_string(std::string_view text, const Parameters& params = {}, bool clamp = false);

  MapSpec with_parameters(const Parameters& params) const;
  MapSpec with_clamp(bool clamp) const;

  /// T(x) with no range checking or clamping.
  double raw(double x) const;

  bool clamp() const noexcept { return clamp_; }
  const Parameters& parameters() const noexcept { return params_; }
  std::optional<Builtin> builtin_kind() const noexcept { return builtin_; }
  const std::optional<Expression>& expression() const noexcept { return expr_; }

  /// Points of [0,1] where T is not differentiable or T' vanishes, known
  /// from the family. Empty for parsed expressions.
  std::vector<double> nonsmooth_points() const;

  /// Human-readable identifier, e.g. "logistic(lambda=4)" or the printed expression.
  std::string id() const;

 private:
  MapSpec() = default;
  void bind();

  std::optional<Builtin> builtin_;
  std::optional<Expression> expr_;
  Parameters params_;
  std::vector<double> bound_;  // builtin: fixed slots; expression: aligned with parameter_names()
  bool clamp_ = false;
};

std::string_view builtin_name(MapSpec::Builtin kind) noexcept;
std::optional<MapSpec::Builtin> builtin_from_name(std::string_view name) noexcept;

/// Parses a DSL expression (not a built-in name).
MapSpec parse_map(std::string_view text);

/// T(x). Throws DomainError if x is outside [0,1], if T(x) is not finite, or
/// if T(x) leaves [0,1] and the spec does not clamp.
double eval_map(const MapSpec& spec, double x);

/// Central difference (T(x+h) - T(x-h)) / 2h.
double eval_map_derivative(const MapSpec& spec, double x, double h = 1e-5);

struct MapViolation {
  double x;
  double value;
  std::string reason;
};

struct ValidationReport {
  std::vector<MapViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Evaluates the map at x_i = i/samples, i = 0..samples.
ValidationReport validate_map(const MapSpec& spec, std::size_t samples = 10000);

}  // namespace ergokit
