#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "cli.hpp"
#include "ergokit/errors.hpp"
#include "ergokit/invariant.hpp"
#include "ergokit/log.hpp"
#include "ergokit/matpow.hpp"
#include "ergokit/memory.hpp"
#include "ergokit/noise.hpp"
#include "ergokit/transfer.hpp"

namespace ergokit::cli {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MapSpec make_map(const RunConfig& c) {
  try {
    return MapSpec::from_string(c.map, c.params, c.clamp);
  } catch (const SyntaxError& e) {
    throw UsageError(std::string("--map: ") + e.what());
  } catch (const UnknownIdentifier& e) {
    throw UsageError(std::string("--map: ") + e.what());
  } catch (const UnboundParameter& e) {
    throw UsageError(std::string("--param: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--param: ") + e.what());
  }
}

NoiseKernel make_kernel(const RunConfig& c) {
  try {
    return parse_kernel(c.kernel);
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--kernel: ") + e.what());
  }
}

void check_bins(const RunConfig& c) {
  if (c.bins < 2) throw UsageError("--bins: need at least 2 bins");
  if (c.quad_order < 2) throw UsageError("--quad-order: need at least 2 nodes");
}

void maybe_export(const TransferMatrix& P, const std::string& path) {
  if (path.empty()) return;
  std::ofstream file(path);
  if (!file) throw UsageError("--export-matrix: cannot open '" + path + "'");
  write_matrix_csv(file, P);
}

// Merges runs of consecutive bins into closed intervals.
nlohmann::ordered_json support_intervals(const std::vector<std::size_t>& states, std::size_t n) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  const double h = 1.0 / static_cast<double>(n);
  for (std::size_t a = 0; a < states.size();) {
    std::size_t b = a;
    while (b + 1 < states.size() && states[b + 1] == states[b] + 1) ++b;
    out.push_back({static_cast<double>(states[a]) * h, static_cast<double>(states[b] + 1) * h});
    a = b + 1;
  }
  return out;
}

void density_csv(CommandOutput& out, const Eigen::VectorXd& masses) {
  const auto n = static_cast<double>(masses.size());
  out.csv.push_back("bin_left,bin_right,mass");
  for (Eigen::Index i = 0; i < masses.size(); ++i)
    out.csv.push_back(fmt(static_cast<double>(i) / n) + "," + fmt(static_cast<double>(i + 1) / n) + "," +
                      fmt(masses(i)));
}

}  // namespace

CommandOutput cmd_invariant(const RunConfig& c, const std::string& export_path) {
  const MapSpec map = make_map(c);
  const NoiseKernel kernel = make_kernel(c);
  check_bins(c);
  if (!(c.mixing_target > 0.0 && c.mixing_target < 1.0)) throw UsageError("--mixing-target: must lie in (0, 1)");

  const bool piecewise = c.piece_width.has_value();
  if (piecewise && !(*c.piece_width > 0.0 && *c.piece_width <= 1.0))
    throw UsageError("--piece-width: must lie in (0, 1]");
  const TransferMatrix P = piecewise ? build_piecewise(map, kernel, *c.piece_width, c.terms, c.quad_order)
                                     : build_ulam(map, kernel, c.bins, c.quad_order);
  maybe_export(P, export_path);

  const StationaryResult s = power_iterate(P, c.resolved_tol(), c.max_iter);
  GridDensity grid;
  CommandOutput out;
  auto& r = out.result;
  if (piecewise) {
    const PiecewisePolyDensity pp = as_piecewise(s, P);
    grid.masses = pp.bin_masses(c.bins);
    grid.error_bound = s.residual;
    r["representation"] = "piecewise";
    r["pieces"] = pp.pieces;
    r["degree"] = P.metadata.degree;
    r["coefficients"] = std::vector<double>(pp.coeffs.data(), pp.coeffs.data() + pp.coeffs.size());
  } else {
    grid = as_grid(s);
    r["representation"] = "ulam";
  }
  r["n_bins"] = grid.n_bins();
  r["masses"] = std::vector<double>(grid.masses.data(), grid.masses.data() + grid.masses.size());
  r["total_mass"] = grid.masses.sum();
  r["residual"] = s.residual;
  r["iterations"] = s.iterations;
  r["gap_estimate"] = nullptr;
  try {
    r["gap_estimate"] = spectral_gap(P, c.resolved_tol(), c.max_iter);
  } catch (const NotConverged& e) {
    log_message(LogLevel::Warning, std::string("gap estimate unavailable: ") + e.what());
  }
  r["power_iteration_rate"] = s.gap_estimate ? nlohmann::ordered_json(*s.gap_estimate) : nlohmann::ordered_json();

  r["mixing_time"] = nullptr;
  if (!piecewise) {
    try {
      MixingResult m = mixing_time(P, c.mixing_target);
      r["mixing_time"] = {{"target", c.mixing_target},
                          {"steps", m.steps},
                          {"gap_bound_steps", m.gap_bound_steps},
                          {"first_state", m.first_state},
                          {"second_state", m.second_state}};
    } catch (const NotMixing& e) {
      log_message(LogLevel::Warning, std::string("mixing time unavailable: ") + e.what());
    }
  }

  r["lyapunov_exponent"] = nullptr;
  try {
    r["lyapunov_exponent"] = lyapunov_exponent(map, grid, c.quad_order);
  } catch (const Error& e) {
    log_message(LogLevel::Warning, std::string("Lyapunov exponent unavailable: ") + e.what());
  }

  if (c.mc_steps > 0) {
    Rng rng(c.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double x = unit(rng);
    for (int i = 0; i < 1000; ++i) x = kernel_sample(kernel, eval_map(map, x), rng);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(grid.masses.size());
    const auto n = static_cast<double>(grid.n_bins());
    for (std::size_t t = 0; t < c.mc_steps; ++t) {
      x = kernel_sample(kernel, eval_map(map, x), rng);
      auto bin = static_cast<Eigen::Index>(std::min(n - 1.0, std::floor(x * n)));
      counts(bin) += 1.0;
    }
    counts /= static_cast<double>(c.mc_steps);
    r["monte_carlo"] = {{"steps", c.mc_steps}, {"seed", c.seed}, {"tv_distance", 0.5 * (counts - grid.masses).lpNorm<1>()}};
  }

  out.iterations = s.iterations;
  out.residual = s.residual;
  density_csv(out, grid.masses);
  return out;
}

CommandOutput cmd_memory(const RunConfig& c) {
  const MapSpec map = make_map(c);
  NoiseKernel kernel = make_kernel(c);
  std::vector<double> eps = c.eps.empty() ? std::vector<double>{kernel.epsilon} : c.eps;
  if (c.n_states && *c.n_states < 2) throw UsageError("--n-states: need at least 2 states");

  std::vector<ScalingRow> rows;
  CommandOutput out;
  out.result["rows"] = nlohmann::ordered_json::array();
  for (double e : eps) {
    kernel.epsilon = e;
    const std::size_t n = c.n_states ? *c.n_states : default_resolution(e);
    CapacityResult cap = memory_of_system(map, kernel, n, c.resolved_tol(), c.quad_order, c.max_iter);
    rows.push_back({e, n, cap.capacity_bits, cap.certified_slack, cap.iterations});
    out.result["rows"].push_back({{"epsilon", e},
                                  {"kernel", describe(kernel)},
                                  {"n_states", n},
                                  {"capacity_bits", cap.capacity_bits},
                                  {"certified_slack", cap.certified_slack},
                                  {"iterations", cap.iterations}});
    out.iterations += cap.iterations;
    out.residual = std::max(out.residual, cap.certified_slack);
  }
  if (rows.size() >= 4) out.result["slope"] = fit_log_slope(rows);

  out.csv.push_back("epsilon,n_states,capacity_bits,certified_slack,iterations");
  for (const auto& row : rows)
    out.csv.push_back(fmt(row.epsilon) + "," + std::to_string(row.n_states) + "," + fmt(row.capacity_bits) + "," +
                      fmt(row.certified_slack) + "," + std::to_string(row.iterations));
  return out;
}

CommandOutput cmd_ergodic(const RunConfig& c, const std::string& export_path) {
  const MapSpec map = make_map(c);
  const NoiseKernel kernel = make_kernel(c);
  check_bins(c);
  if (!(c.threshold >= 0.0)) throw UsageError("--threshold: must be nonnegative");
  const TransferMatrix P = build_ulam(map, kernel, c.bins, c.quad_order);
  maybe_export(P, export_path);
  const ErgodicDecomposition d = ergodic_components(P, c.threshold);

  CommandOutput out;
  auto& r = out.result;
  r["n_bins"] = c.bins;
  r["threshold"] = d.threshold;
  r["count"] = d.components.size();
  r["components"] = nlohmann::ordered_json::array();
  out.csv.push_back("component,bin_left,bin_right,mass");
  const double h = 1.0 / static_cast<double>(c.bins);
  for (std::size_t ci = 0; ci < d.components.size(); ++ci) {
    const auto& comp = d.components[ci];
    r["components"].push_back({{"index", ci},
                               {"n_states", comp.states.size()},
                               {"support", support_intervals(comp.states, c.bins)},
                               {"states", comp.states},
                               {"masses", std::vector<double>(comp.density.data(),
                                                              comp.density.data() + comp.density.size())},
                               {"residual", comp.residual}});
    out.residual = std::max(out.residual, comp.residual);
    for (std::size_t s = 0; s < comp.states.size(); ++s)
      out.csv.push_back(std::to_string(ci) + "," + fmt(static_cast<double>(comp.states[s]) * h) + "," +
                        fmt(static_cast<double>(comp.states[s] + 1) * h) + "," +
                        fmt(comp.density(static_cast<Eigen::Index>(s))));
  }

  // Smallest gap between the supports of different components.
  nlohmann::ordered_json separation = nullptr;
  double best = INFINITY;
  for (std::size_t a = 0; a < d.components.size(); ++a)
    for (std::size_t b = a + 1; b < d.components.size(); ++b)
      for (std::size_t i : d.components[a].states)
        for (std::size_t j : d.components[b].states) {
          double dist = (i < j ? static_cast<double>(j - i - 1) : static_cast<double>(i - j - 1)) * h;
          best = std::min(best, dist);
        }
  if (std::isfinite(best)) separation = best;
  r["min_separation"] = separation;
  return out;
}

CommandOutput cmd_gap(const RunConfig& c, const std::string& export_path) {
  const MapSpec map = make_map(c);
  const NoiseKernel kernel = make_kernel(c);
  check_bins(c);
  if (c.doeblin_grid < 2) throw UsageError("--doeblin-grid: need at least 2 points");
  const TransferMatrix P = build_ulam(map, kernel, c.bins, c.quad_order);
  maybe_export(P, export_path);
  const double gap = spectral_gap(P, c.resolved_tol(), c.max_iter);
  const double doeblin = doeblin_lower_bound(map, kernel, c.doeblin_grid);
  const double exp_bound = std::exp(-1.0 / (kernel.epsilon * kernel.epsilon));

  CommandOutput out;
  out.result = {{"epsilon", kernel.epsilon},
                {"gap", gap},
                {"doeblin_lower_bound", doeblin},
                {"exp_lower_bound", exp_bound},
                {"gap_at_least_doeblin", gap >= doeblin}};
  out.residual = 0.0;
  out.csv = {"gap,doeblin_lower_bound,exp_lower_bound", fmt(gap) + "," + fmt(doeblin) + "," + fmt(exp_bound)};
  return out;
}

CommandOutput cmd_power(const RunConfig& c) {
  const MapSpec map = make_map(c);
  const NoiseKernel kernel = make_kernel(c);
  check_bins(c);
  if (c.n_bits < 1 || c.n_bits > 50) throw UsageError("--n: must lie in [1, 50]");
  BigCount T;
  try {
    T = parse_count(c.power);
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--T: ") + e.what());
  }
  if (c.gamma && !(*c.gamma > 0.0 && *c.gamma <= 1.0)) throw UsageError("--gamma: must lie in (0, 1]");

  const TransferMatrix P = build_ulam(map, kernel, c.bins, c.quad_order);
  const double gamma = c.gamma ? *c.gamma : std::min(1.0, spectral_gap(P, c.resolved_tol(), c.max_iter));
  const PowerPolynomial p = build_power_polynomial(gamma, T, c.n_bits);

  const Eigen::Index n = P.dim();
  Eigen::MatrixXd poly(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    poly.col(j) = apply_power_polynomial(p, P.entries, Eigen::VectorXd(Eigen::VectorXd::Unit(n, j)));
  const Eigen::MatrixXd exact = power_by_squaring(P.entries, T);
  const double deviation = (poly - exact).cwiseAbs().maxCoeff();
  const double bound = std::ldexp(1.0, -c.n_bits);
  if (deviation > bound) log_message(LogLevel::Warning, "power: deviation exceeds 2^-n");

  CommandOutput out;
  out.result = {{"dim", n},
                {"gamma", gamma},
                {"gamma_source", c.gamma ? "given" : "measured"},
                {"rho", p.rho},
                {"T", T.str()},
                {"T_min", minimum_power(gamma, c.n_bits).str()},
                {"n", c.n_bits},
                {"degree", p.degree},
                {"sampled_max", p.sampled_max},
                {"max_deviation", deviation},
                {"deviation_bound", bound},
                {"within_bound", deviation <= bound}};
  out.residual = deviation;
  out.csv = {"dim,gamma,degree,T,T_min,n,max_deviation",
             std::to_string(n) + "," + fmt(gamma) + "," + std::to_string(p.degree) + "," + T.str() + "," +
                 minimum_power(gamma, c.n_bits).str() + "," + std::to_string(c.n_bits) + "," + fmt(deviation)};
  return out;
}

}  // namespace ergokit::cli
