#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ergokit/errors.hpp"
#include "ergokit/log.hpp"
#include "ergokit/noise.hpp"
#include "ergokit/parallel.hpp"

namespace ergokit::cli {
namespace {

// Raw flag storage; only flags the user actually passed are copied into the
// RunConfig, so that --config values survive.
struct Flags {
  std::string config, output = "-", export_matrix;
  std::string map, kernel, format, power;
  std::vector<std::string> params, eps;
  std::size_t bins = 0, terms = 0, quad_order = 0, max_iter = 0, mc_steps = 0, n_states = 0, doeblin_grid = 0;
  double piece_width = 0, tol = 0, mixing_target = 0, threshold = 0, gamma = 0;
  std::uint64_t seed = 0;
  int n_bits = 0;
  bool clamp = false;
};

using Apply = std::function<void(RunConfig&)>;

struct Sub {
  CLI::App* app = nullptr;
  CLI::Option* config = nullptr;
  std::vector<std::pair<CLI::Option*, Apply>> setters;
};

template <typename T>
void add(Sub& s, const std::string& name, T& target, const std::string& help, Apply apply) {
  s.setters.emplace_back(s.app->add_option(name, target, help), std::move(apply));
}

Sub make_sub(CLI::App& app, const std::string& name, const std::string& help, Flags& f) {
  Sub s;
  s.app = app.add_subcommand(name, help);
  s.config = s.app->add_option("--config", f.config, "JSON run config; flags given on the command line win");
  s.app->add_option("-o,--output", f.output, "result file, '-' for standard output");
  add(s, "--map", f.map, "builtin name or expression in x", [&f](RunConfig& c) { c.map = f.map; });
  add(s, "--param", f.params, "map parameter name=value (repeatable)", [&f](RunConfig& c) {
    for (const auto& p : f.params) {
      auto [name, value] = parse_param(p);
      c.params[name] = value;
    }
  });
  s.setters.emplace_back(s.app->add_flag("--clamp", f.clamp, "clip map values into [0,1]"),
                         [&f](RunConfig& c) { c.clamp = f.clamp; });
  add(s, "--kernel", f.kernel, "noise kernel family:epsilon[:boundary]", [&f](RunConfig& c) { c.kernel = f.kernel; });
  add(s, "--bins", f.bins, "number of Ulam bins", [&f](RunConfig& c) { c.bins = f.bins; });
  add(s, "--quad-order", f.quad_order, "Gauss-Legendre nodes per bin", [&f](RunConfig& c) { c.quad_order = f.quad_order; });
  add(s, "--tol", f.tol, "solver tolerance", [&f](RunConfig& c) { c.tol = f.tol; });
  add(s, "--max-iter", f.max_iter, "iteration cap", [&f](RunConfig& c) { c.max_iter = f.max_iter; });
  add(s, "--seed", f.seed, "random seed", [&f](RunConfig& c) { c.seed = f.seed; });
  add(s, "--format", f.format, "json or csv", [&f](RunConfig& c) { c.format = f.format; });
  return s;
}

void add_export(Sub& s, Flags& f) {
  s.app->add_option("--export-matrix", f.export_matrix, "write the transfer matrix as CSV");
}

RunConfig resolve(const Sub& s, const std::string& command, const Flags& f) {
  RunConfig c;
  c.command = command;
  if (s.config->count() > 0) {
    std::ifstream file(f.config);
    if (!file) throw UsageError("--config: cannot open '" + f.config + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(file);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError(std::string("--config: ") + e.what());
    }
    merge_json(c, j);
  }
  for (const auto& [opt, apply] : s.setters)
    if (opt->count() > 0) apply(c);
  if (c.format != "json" && c.format != "csv") throw UsageError("--format: expected json or csv, got '" + c.format + "'");
  if (c.tol && !(*c.tol > 0.0)) throw UsageError("--tol: must be positive");
  try {
    c.kernel = describe(parse_kernel(c.kernel));
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--kernel: ") + e.what());
  }
  return c;
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path);
  if (!file) throw UsageError("--output: cannot open '" + path + "'");
  file << text;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Invariant measures, mixing and memory of noisy interval maps", "ergokit"};
  app.require_subcommand(1);
  Flags f;

  Sub inv = make_sub(app, "invariant", "stationary density, gap estimate and mixing time", f);
  add(inv, "--piece-width", f.piece_width, "use the piecewise-polynomial representation",
      [&f](RunConfig& c) { c.piece_width = f.piece_width; });
  add(inv, "--terms", f.terms, "polynomial degree K per piece", [&f](RunConfig& c) { c.terms = f.terms; });
  add(inv, "--mixing-target", f.mixing_target, "total-variation target for the mixing time",
      [&f](RunConfig& c) { c.mixing_target = f.mixing_target; });
  add(inv, "--mc-steps", f.mc_steps, "length of a seeded Monte Carlo cross-check orbit",
      [&f](RunConfig& c) { c.mc_steps = f.mc_steps; });
  add_export(inv, f);

  Sub mem = make_sub(app, "memory", "channel capacity of one noisy step", f);
  mem.setters.emplace_back(
      mem.app->add_option("--eps", f.eps, "noise levels, e.g. 0.125 or 2^-3")->delimiter(','),
      [&f](RunConfig& c) {
        c.eps.clear();
        for (const auto& e : f.eps) c.eps.push_back(parse_epsilon(e));
      });
  add(mem, "--n-states", f.n_states, "channel size (default max(64, ceil(16/eps)))",
      [&f](RunConfig& c) { c.n_states = f.n_states; });

  Sub erg = make_sub(app, "ergodic", "ergodic decomposition of the Ulam chain", f);
  add(erg, "--threshold", f.threshold, "support threshold for the transition graph",
      [&f](RunConfig& c) { c.threshold = f.threshold; });
  add_export(erg, f);

  Sub gap = make_sub(app, "gap", "spectral gap and Doeblin lower bound", f);
  add(gap, "--doeblin-grid", f.doeblin_grid, "grid size for the Doeblin bound",
      [&f](RunConfig& c) { c.doeblin_grid = f.doeblin_grid; });
  add_export(gap, f);

  Sub pow = make_sub(app, "power", "polynomial approximation of a large matrix power", f);
  add(pow, "--T", f.power, "exponent, decimal or 2^k", [&f](RunConfig& c) { c.power = f.power; });
  add(pow, "--n", f.n_bits, "target precision 2^-n", [&f](RunConfig& c) { c.n_bits = f.n_bits; });
  add(pow, "--gamma", f.gamma, "spectral gap to assume (default: measured)", [&f](RunConfig& c) { c.gamma = f.gamma; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "ergokit: " << e.what() << "\n";
    return kUsage;
  }

  std::vector<std::string> messages;
  std::mutex messages_mutex;
  set_log_sink([&](LogLevel level, std::string_view msg) {
    if (level == LogLevel::Debug) return;
    std::lock_guard lock(messages_mutex);
    messages.emplace_back(msg);
  });
  struct ResetSink {
    ~ResetSink() { set_log_sink(nullptr); }
  } reset;

  try {
    const Sub* chosen = nullptr;
    std::string command;
    for (const Sub* s : {&inv, &mem, &erg, &gap, &pow})
      if (s->app->parsed()) {
        chosen = s;
        command = s->app->get_name();
      }
    if (chosen->app->get_subcommands().size() > 0 || !chosen->app->remaining().empty())
      throw UsageError("unexpected arguments");
    const RunConfig config = resolve(*chosen, command, f);

    const auto start = std::chrono::steady_clock::now();
    CommandOutput result;
    if (command == "invariant") result = cmd_invariant(config, f.export_matrix);
    else if (command == "memory") result = cmd_memory(config);
    else if (command == "ergodic") result = cmd_ergodic(config, f.export_matrix);
    else if (command == "gap") result = cmd_gap(config, f.export_matrix);
    else result = cmd_power(config);
    const double elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    std::string text;
    if (config.format == "csv") {
      for (const auto& line : result.csv) text += line + "\n";
    } else {
      // Parallel sections may log in any order.
      std::set<std::string> unique(messages.begin(), messages.end());
      nlohmann::ordered_json doc;
      doc["schema_version"] = kSchemaVersion;
      doc["command"] = command;
      doc["config"] = to_json(config);
      doc["result"] = std::move(result.result);
      doc["diagnostics"] = {{"iterations", result.iterations},
                            {"residual", result.residual},
                            {"messages", std::vector<std::string>(unique.begin(), unique.end())}};
      doc["metadata"] = {{"wall_time_ms", elapsed}, {"threads", thread_count()}};
      text = doc.dump(2) + "\n";
    }
    write_output(f.output, text, out);
    return kSuccess;
  } catch (const UsageError& e) {
    err << "ergokit: " << e.what() << "\n";
    return kUsage;
  } catch (const NotConverged& e) {
    err << "ergokit: NotConverged: " << e.what() << "\n";
    return kNotConverged;
  } catch (const NotMixing& e) {
    err << "ergokit: NotMixing: " << e.what() << "\n";
    return kNotConverged;
  } catch (const PowerTooSmall& e) {
    err << "ergokit: " << e.what() << "\n";
    return kNotConverged;
  } catch (const CertificateFailed& e) {
    err << "ergokit: CertificateFailed: " << e.what() << "\n";
    return kNotConverged;
  } catch (const std::exception& e) {
    err << "ergokit: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace ergokit::cli
