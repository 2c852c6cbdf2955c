#include "ergokit/maps.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ergokit/errors.hpp"

namespace ergokit {
namespace {

struct BuiltinInfo {
  MapSpec::Builtin kind;
  std::string_view name;
  std::vector<std::pair<std::string_view, double>> slots;
};

const std::vector<BuiltinInfo>& builtin_table() {
  static const std::vector<BuiltinInfo> table{
      {MapSpec::Builtin::Logistic, "logistic", {{"lambda", 4.0}}},
      {MapSpec::Builtin::Doubling, "doubling", {}},
      {MapSpec::Builtin::Tent, "tent", {{"mu", 2.0}}},
      {MapSpec::Builtin::Rotation, "rotation", {{"alpha", 0.5 * (std::sqrt(5.0) - 1.0)}}},
      {MapSpec::Builtin::Identity, "identity", {}},
      {MapSpec::Builtin::PiecewiseConst, "piecewise-const", {{"split", 0.5}, {"low", 0.25}, {"high", 0.75}}},
  };
  return table;
}

const BuiltinInfo& info_for(MapSpec::Builtin kind) {
  for (const auto& info : builtin_table())
    if (info.kind == kind) return info;
  throw InvalidArgument("unknown builtin map");
}

std::string format_number(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

}  // namespace

std::string_view builtin_name(MapSpec::Builtin kind) noexcept {
  for (const auto& info : builtin_table())
    if (info.kind == kind) return info.name;
  return "?";
}

std::optional<MapSpec::Builtin> builtin_from_name(std::string_view name) noexcept {
  for (const auto& info : builtin_table())
    if (info.name == name) return info.kind;
  return std::nullopt;
}

MapSpec MapSpec::builtin(Builtin kind, const Parameters& params) {
  MapSpec spec;
  spec.builtin_ = kind;
  spec.params_ = params;
  spec.bind();
  return spec;
}

MapSpec MapSpec::from_expression(Expression expr, const Parameters& params, bool clamp) {
  MapSpec spec;
  spec.expr_ = std::move(expr);
  spec.params_ = params;
  spec.clamp_ = clamp;
  spec.bind();
  return spec;
}

MapSpec MapSpec::from_string(std::string_view text, const Parameters& params, bool clamp) {
  if (auto kind = builtin_from_name(text)) return builtin(*kind, params).with_clamp(clamp);
  return from_expression(Expression::parse(text), params, clamp);
}

MapSpec MapSpec::with_parameters(const Parameters& params) const {
  MapSpec copy = *this;
  for (const auto& [k, v] : params) copy.params_[k] = v;
  copy.bind();
  return copy;
}

MapSpec MapSpec::with_clamp(bool clamp) const {
  MapSpec copy = *this;
  copy.clamp_ = clamp;
  return copy;
}

void MapSpec::bind() {
  for (const auto& [name, value] : params_)
    if (!std::isfinite(value)) throw InvalidArgument("parameter '" + name + "' is not finite");

  bound_.clear();
  if (builtin_) {
    const auto& info = info_for(*builtin_);
    for (const auto& [name, value] : params_) {
      bool known = std::any_of(info.slots.begin(), info.slots.end(),
                               [&](const auto& slot) { return slot.first == name; });
      if (!known)
        throw InvalidArgument("map '" + std::string(info.name) + "' has no parameter '" + name + "'");
    }
    for (const auto& [name, fallback] : info.slots) {
      auto it = params_.find(name);
      bound_.push_back(it == params_.end() ? fallback : it->second);
    }
  } else {
    for (const auto& name : expr_->parameter_names()) {
      auto it = params_.find(name);
      bound_.push_back(it == params_.end() ? std::numeric_limits<double>::quiet_NaN() : it->second);
    }
  }
}

double MapSpec::raw(double x) const {
  if (!builtin_) return expr_->evaluate(x, bound_);
  switch (*builtin_) {
    case Builtin::Logistic:
      return bound_[0] * x * (1.0 - x);
    case Builtin::Doubling: {
      double y = 2.0 * x;
      return y - std::floor(y);
    }
    case Builtin::Tent:
      return bound_[0] * std::min(x, 1.0 - x);
    case Builtin::Rotation: {
      double y = x + bound_[0];
      return y - std::floor(y);
    }
    case Builtin::Identity:
      return x;
    case Builtin::PiecewiseConst:
      return x < bound_[0] ? bound_[1] : bound_[2];
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> MapSpec::nonsmooth_points() const {
  if (!builtin_) return {};
  switch (*builtin_) {
    case Builtin::Logistic:
    case Builtin::Doubling:
    case Builtin::Tent:
      return {0.5};
    case Builtin::Rotation: {
      double cut = 1.0 - (bound_[0] - std::floor(bound_[0]));
      if (cut > 0.0 && cut < 1.0) return {cut};
      return {};
    }
    case Builtin::PiecewiseConst:
      return {bound_[0]};
    case Builtin::Identity:
      return {};
  }
  return {};
}

std::string MapSpec::id() const {
  if (!builtin_) return expr_->to_string();
  const auto& info = info_for(*builtin_);
  std::string out(info.name);
  if (!info.slots.empty()) {
    out += '(';
    for (std::size_t i = 0; i < info.slots.size(); ++i) {
      if (i > 0) out += ',';
      out += std::string(info.slots[i].first) + "=" + format_number(bound_[i]);
    }
    out += ')';
  }
  return out;
}

MapSpec parse_map(std::string_view text) {
  return MapSpec::from_expression(Expression::parse(text));
}

double eval_map(const MapSpec& spec, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("map argument " + format_number(x) + " outside [0,1]");
  double y = spec.raw(x);
  if (!std::isfinite(y))
    throw DomainError("map value at x=" + format_number(x) + " is not finite");
  if (spec.clamp()) return std::clamp(y, 0.0, 1.0);
  if (y < 0.0 || y > 1.0)
    throw DomainError("map value " + format_number(y) + " at x=" + format_number(x) + " outside [0,1]");
  return y;
}

double eval_map_derivative(const MapSpec& spec, double x, double h) {
  if (!(h > 0.0)) throw InvalidArgument("derivative step must be positive");
  if (x - h < 0.0 || x + h > 1.0)
    throw DomainError("derivative stencil at x=" + format_number(x) + " leaves [0,1]");
  return (eval_map(spec, x + h) - eval_map(spec, x - h)) / (2.0 * h);
}

ValidationReport validate_map(const MapSpec& spec, std::size_t samples) {
  if (samples < 2) throw InvalidArgument("validate_map needs at least 2 samples");
  ValidationReport report;
  for (std::size_t i = 0; i <= samples; ++i) {
    double x = static_cast<double>(i) / static_cast<double>(samples);
    double y = std::numeric_limits<double>::quiet_NaN();
    try {
      y = spec.raw(x);
    } catch (const UnboundParameter& e) {
      report.violations.push_back({x, y, e.what()});
      continue;
    }
    if (!std::isfinite(y))
      report.violations.push_back({x, y, "non-finite value"});
    else if (!spec.clamp() && (y < 0.0 || y > 1.0))
      report.violations.push_back({x, y, "value outside [0,1]"});
  }
  return report;
}

}  // namespace ergokit
