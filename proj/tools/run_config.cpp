#include "run_config.hpp"

#include <charconv>
#include <cmath>

namespace ergokit::cli {
namespace {

double parse_double(const std::string& text, const std::string& what) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value))
    throw UsageError(what + ": expected a number, got '" + text + "'");
  return value;
}

template <typename T>
T get_field(const nlohmann::json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw UsageError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

double RunConfig::resolved_tol() const {
  if (tol) return *tol;
  if (command == "memory") return 1e-4;
  return 1e-10;
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["command"] = c.command;
  j["map"] = c.map;
  j["params"] = nlohmann::ordered_json::object();
  for (const auto& [name, value] : c.params) j["params"][name] = value;
  j["clamp"] = c.clamp;
  j["kernel"] = c.kernel;
  j["bins"] = c.bins;
  j["piece_width"] = c.piece_width ? nlohmann::ordered_json(*c.piece_width) : nlohmann::ordered_json(nullptr);
  j["terms"] = c.terms;
  j["quad_order"] = c.quad_order;
  j["tol"] = c.resolved_tol();
  j["max_iter"] = c.max_iter;
  j["seed"] = c.seed;
  j["format"] = c.format;
  if (c.command == "invariant") {
    j["mixing_target"] = c.mixing_target;
    j["mc_steps"] = c.mc_steps;
  } else if (c.command == "memory") {
    j["eps"] = c.eps;
    j["n_states"] = c.n_states ? nlohmann::ordered_json(*c.n_states) : nlohmann::ordered_json(nullptr);
  } else if (c.command == "ergodic") {
    j["threshold"] = c.threshold;
  } else if (c.command == "gap") {
    j["doeblin_grid"] = c.doeblin_grid;
  } else if (c.command == "power") {
    j["T"] = c.power;
    j["n"] = c.n_bits;
    j["gamma"] = c.gamma ? nlohmann::ordered_json(*c.gamma) : nlohmann::ordered_json(nullptr);
  }
  return j;
}

void merge_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const char* k = key.c_str();
    if (key == "command") {
      auto cmd = get_field<std::string>(value, k);
      if (!c.command.empty() && cmd != c.command)
        throw UsageError("config is for command '" + cmd + "', not '" + c.command + "'");
    } else if (key == "map") {
      c.map = get_field<std::string>(value, k);
    } else if (key == "params") {
      if (!value.is_object()) throw UsageError("config key 'params' must be an object");
      c.params.clear();
      for (const auto& [name, v] : value.items()) c.params[name] = get_field<double>(v, k);
    } else if (key == "clamp") {
      c.clamp = get_field<bool>(value, k);
    } else if (key == "kernel") {
      c.kernel = get_field<std::string>(value, k);
    } else if (key == "bins") {
      c.bins = get_field<std::size_t>(value, k);
    } else if (key == "piece_width") {
      c.piece_width = value.is_null() ? std::nullopt : std::optional<double>(get_field<double>(value, k));
    } else if (key == "terms") {
      c.terms = get_field<std::size_t>(value, k);
    } else if (key == "quad_order") {
      c.quad_order = get_field<std::size_t>(value, k);
    } else if (key == "tol") {
      c.tol = value.is_null() ? std::nullopt : std::optional<double>(get_field<double>(value, k));
    } else if (key == "max_iter") {
      c.max_iter = get_field<std::size_t>(value, k);
    } else if (key == "seed") {
      c.seed = get_field<std::uint64_t>(value, k);
    } else if (key == "format") {
      c.format = get_field<std::string>(value, k);
    } else if (key == "mixing_target") {
      c.mixing_target = get_field<double>(value, k);
    } else if (key == "mc_steps") {
      c.mc_steps = get_field<std::size_t>(value, k);
    } else if (key == "eps") {
      c.eps = get_field<std::vector<double>>(value, k);
    } else if (key == "n_states") {
      c.n_states = value.is_null() ? std::nullopt : std::optional<std::size_t>(get_field<std::size_t>(value, k));
    } else if (key == "threshold") {
      c.threshold = get_field<double>(value, k);
    } else if (key == "doeblin_grid") {
      c.doeblin_grid = get_field<std::size_t>(value, k);
    } else if (key == "T") {
      c.power = value.is_number_unsigned() ? std::to_string(value.get<std::uint64_t>()) : get_field<std::string>(value, k);
    } else if (key == "n") {
      c.n_bits = get_field<int>(value, k);
    } else if (key == "gamma") {
      c.gamma = value.is_null() ? std::nullopt : std::optional<double>(get_field<double>(value, k));
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
}

double parse_epsilon(const std::string& text) {
  double eps = 0.0;
  if (text.rfind("2^", 0) == 0) {
    eps = std::exp2(parse_double(text.substr(2), "--eps"));
  } else {
    eps = parse_double(text, "--eps");
  }
  if (!(eps > 0.0 && eps <= 1.0)) throw UsageError("--eps: values must lie in (0, 1], got '" + text + "'");
  return eps;
}

std::pair<std::string, double> parse_param(const std::string& text) {
  auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--param: expected name=value, got '" + text + "'");
  return {text.substr(0, eq), parse_double(text.substr(eq + 1), "--param " + text.substr(0, eq))};
}

}  // namespace ergokit::cli
