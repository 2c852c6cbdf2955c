// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "ergokit/invariant.hpp"
#include "ergokit/matpow.hpp"
#include "ergokit/memory.hpp"
#include "ergokit/quadrature.hpp"
#include "ergokit/transfer.hpp"
#include "oracles.hpp"

using namespace ergokit;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Appends a failed sub-check to the outcome.
void require(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + what;
  }
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  require(o, secs <= budget_s, fmt("runtime %.1fs over budget %.0fs", secs, budget_s));
  failures += !o.pass;
  std::printf("%s %d %s (%.1fs) %s\n", o.pass ? "PASS" : "FAIL", id, name, secs, o.detail.c_str());
  std::fflush(stdout);
}

TransferMatrix from_entries(const Eigen::MatrixXd& M) {
  TransferMatrix P;
  P.entries = M;
  P.metadata.n_bins = static_cast<std::size_t>(M.rows());
  return P;
}

MapSpec logistic() { return MapSpec::builtin(MapSpec::Builtin::Logistic, {{"lambda", 4.0}}); }

std::string run_cli_stable(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  if (cli::run_cli(args, out, err) != 0) return "exit!=0: " + err.str();
  auto j = nlohmann::json::parse(out.str());
  j.erase("metadata");
  return j.dump();
}

}  // namespace

int main() {
  criterion(1, "memory scaling, identity + wrap uniform noise", 120, [] {
    Outcome o;
    std::vector<double> eps;
    for (int k = 3; k <= 8; ++k) eps.push_back(std::ldexp(1.0, -k));
    auto s = memory_scaling(MapSpec::builtin(MapSpec::Builtin::Identity), parse_kernel("uniform:0.1:wrap"), eps);
    double worst = 0.0;
    for (const auto& r : s.rows) worst = std::max(worst, std::fabs(r.capacity_bits - std::log2(1.0 / (2 * r.epsilon))));
    require(o, s.slope >= 0.9 && s.slope <= 1.1, fmt("slope %.4f outside [0.9, 1.1]", s.slope));
    require(o, worst <= 0.05, fmt("closed-form deviation %.4f > 0.05 bits", worst));
    o.detail = fmt("slope=%.4f max|C-log2(1/2eps)|=%.4f", s.slope, worst) + (o.pass ? "" : " | " + o.detail);
    return o;
  });

  criterion(2, "noise entropy closed forms", 30, [] {
    Outcome o;
    double worst = 0.0;
    for (const char* family : {"uniform", "gaussian"}) {
      double prev = -INFINITY;
      for (int k = 8; k >= 2; --k) {
        double eps = std::ldexp(1.0, -k);
        NoiseKernel kern{std::string(family) == "uniform" ? KernelFamily::UniformBall : KernelFamily::Gaussian, eps,
                         Boundary::Wrap};
        // -int f log2 f of the boundary-free density, by composite Gauss-Legendre
        double numeric;
        if (kern.family == KernelFamily::UniformBall) {
          double f = 0.5 / eps;
          numeric = -integrate([&](double) { return f * std::log2(f); }, -eps, eps, 16, 8);
        } else {
          numeric = -integrate(
              [&](double x) {
                double f = oracle::normal_pdf(x / eps) / eps;
                return f > 0 ? f * std::log2(f) : 0.0;
              },
              -12 * eps, 12 * eps, 16, 64);
        }
        double h = kernel_entropy(kern);
        worst = std::max(worst, std::fabs(numeric - h));
        require(o, h > prev, std::string(family) + " entropy not increasing in eps");
        prev = h;
      }
    }
    require(o, worst <= 1e-3, fmt("max deviation %.2e > 1e-3 bits", worst));
    o.detail = fmt("max|quadrature-closed form|=%.2e bits", worst) + (o.pass ? "" : " | " + o.detail);
    return o;
  });

  criterion(3, "ergodic decomposition, two attractors and doubling", 30, [] {
    Outcome o;
    const std::size_t n = 128;
    const double eps = 0.1;
    auto two = ergodic_components(
        build_ulam(MapSpec::builtin(MapSpec::Builtin::PiecewiseConst), parse_kernel("uniform:0.1:wrap"), n));
    require(o, two.components.size() == 2, "two-attractor map gave " + std::to_string(two.components.size()) + " components");
    double sep = 1.0;
    if (two.components.size() == 2)
      for (auto i : two.components[0].states)
        for (auto j : two.components[1].states)
          sep = std::min(sep, (std::fabs(double(i) - double(j)) - 1.0) / double(n));
    // supports are unions of whole bins, so allow one bin of slack
    require(o, sep >= 2 * eps - 1.0 / n, fmt("separation %.4f < 2 eps", sep));
    auto one = ergodic_components(build_ulam(MapSpec::builtin(MapSpec::Builtin::Doubling), parse_kernel("gaussian:0.05:wrap"), n));
    require(o, one.components.size() == 1, "doubling gave " + std::to_string(one.components.size()) + " components");
    o.detail = fmt("components=%.0f,%.0f separation=%.4f", double(two.components.size()), double(one.components.size()), sep) +
               (o.pass ? "" : " | " + o.detail);
    return o;
  });

  criterion(4, "Ulam vs piecewise-polynomial stationary measure", 120, [] {
    Outcome o;
    auto k = parse_kernel("gaussian:0.1:wrap");
    auto ulam = power_iterate(build_ulam(logistic(), k, 1024), 1e-12).density;
    auto P = build_piecewise(logistic(), k, 0.1, 8);
    auto rho = as_piecewise(power_iterate(P, 1e-12), P);
    double d = oracle::tv(rho.bin_masses(1024), ulam);
    require(o, d <= 5e-3, fmt("TV %.2e > 5e-3", d));
    o.detail = fmt("TV=%.3e", d) + (o.pass ? "" : " | " + o.detail);
    return o;
  });

  criterion(5, "Chebyshev amplifier vs repeated squaring, T=2^40, n=16", 60, [] {
    Outcome o;
    const BigCount T = BigCount(1) << 40;
    const int n = 16;
    int cases = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; cases < 20 && seed < 1000; ++seed) {
      Eigen::Index D = 4 + static_cast<Eigen::Index>((seed * 7) % 61);
      Eigen::MatrixXd M = oracle::random_reversible(D, seed, 0.1 * static_cast<double>(D));
      double gamma = spectral_gap(from_entries(M));
      if (gamma < 0.3) continue;
      ++cases;
      auto p = build_power_polynomial(gamma, T, n);
      auto d_formula = static_cast<std::size_t>(std::ceil((n + 2) * std::numbers::ln2 / std::sqrt(2 * gamma)));
      require(o, p.degree == d_formula, "degree differs from the formula");
      Eigen::MatrixXd ref = power_by_squaring(M, T);
      for (Eigen::Index c = 0; c < D; ++c) {
        Eigen::VectorXd col = apply_power_polynomial(p, M, Eigen::VectorXd(Eigen::VectorXd::Unit(D, c)));
        worst = std::max(worst, (col - ref.col(c)).lpNorm<Eigen::Infinity>());
      }
    }
    require(o, cases == 20, "only " + std::to_string(cases) + " matrices with gap >= 0.3");
    require(o, worst <= std::ldexp(1.0, -n), fmt("deviation %.2e > 2^-16", worst));
    o.detail = fmt("cases=%.0f max deviation=%.2e (bound %.2e)", cases, worst, std::ldexp(1.0, -n)) +
               (o.pass ? "" : " | " + o.detail);
    return o;
  });

  criterion(6, "spectral gap >= Doeblin bound >= exp(-1/eps^2)", 60, [] {
    Outcome o;
    double min_margin = INFINITY;
    for (double eps : {0.1, 0.2, 0.4})
      for (auto map : {logistic(), MapSpec::builtin(MapSpec::Builtin::Doubling), MapSpec::builtin(MapSpec::Builtin::Tent)}) {
        auto k = parse_kernel("gaussian:" + std::to_string(eps) + ":wrap");
        double gap = spectral_gap(build_ulam(map, k, 256));
        double delta = doeblin_lower_bound(map, k);
        double floor = std::exp(-1.0 / (eps * eps));
        require(o, gap >= delta, map.id() + fmt(" eps=%.1f: gap %.3e < doeblin %.3e", eps, gap, delta));
        require(o, delta >= floor, map.id() + fmt(" eps=%.1f: doeblin %.3e < exp(-1/eps^2) %.3e", eps, delta, floor));
        min_margin = std::min(min_margin, gap - delta);
      }
    o.detail = fmt("9 cases, min(gap - doeblin)=%.3e", min_margin) + (o.pass ? "" : " | " + o.detail);
    return o;
  });

  criterion(7, "closed-form oracles", 30, [] {
    Outcome o;
    Eigen::Matrix2d M;
    M << 0.75, 0.25, 0.25, 0.75;
    Eigen::MatrixXd M10 = power_by_squaring(Eigen::MatrixXd(M), BigCount(10));
    double e1 = std::max(std::fabs(M10(0, 0) - (0.5 + std::pow(0.5, 11))), std::fabs(M10(0, 1) - (0.5 - std::pow(0.5, 11))));
    require(o, e1 <= 1e-15, fmt("2x2 power error %.2e", e1));

    Eigen::Matrix2d B;
    B << 0.9, 0.1, 0.1, 0.9;
    auto W = ChannelMatrix::from_rows(B);
    double c1 = capacity(W, 1e-9).capacity_bits, c2 = capacity_at_lag(W, 2, 1e-9).capacity_bits;
    double e2 = std::fabs(c1 - (1 - oracle::binary_entropy(0.1)));
    double e3 = std::fabs(c2 - (1 - oracle::binary_entropy(0.18)));
    require(o, e2 <= 1e-8, fmt("BSC capacity error %.2e", e2));
    require(o, e3 <= 1e-8, fmt("lag-2 BSC error %.2e", e3));

    double lam = lyapunov_exponent(MapSpec::builtin(MapSpec::Builtin::Doubling), GridDensity::uniform(256));
    double e4 = std::fabs(lam - std::numbers::ln2);
    require(o, e4 <= 1e-4, fmt("doubling Lyapunov error %.2e", e4));

    double e5 = 0.0;
    for (auto map : {MapSpec::builtin(MapSpec::Builtin::Doubling), MapSpec::builtin(MapSpec::Builtin::Rotation),
                     MapSpec::builtin(MapSpec::Builtin::Identity)}) {
      auto P = build_ulam(map, parse_kernel("gaussian:0.05:wrap"), 256);
      Eigen::VectorXd u = Eigen::VectorXd::Constant(256, 1.0 / 256);
      e5 = std::max(e5, (P.entries * u - u).lpNorm<1>());
    }
    require(o, e5 <= 1e-8, fmt("uniform invariance error %.2e", e5));
    o.detail = fmt("power %.1e, BSC %.1e, lag-2 %.1e", e1, e2, e3) + fmt(", Lyapunov %.1e, uniform %.1e", e4, e5) +
               (o.pass ? "" : " | " + o.detail);
    return o;
  });

  criterion(8, "invariant suites", 120, [] {
    Outcome o;
    double drift = 0.0, residual = 0.0;
    for (const char* m : {"logistic", "doubling", "tent", "rotation", "identity", "piecewise-const"})
      for (const char* k : {"gaussian:0.05:wrap", "gaussian:0.1:reflect", "gaussian:0.1:renormalize", "uniform:0.1:wrap"}) {
        auto P = build_ulam(MapSpec::from_string(m), parse_kernel(k), 128);
        drift = std::max(drift, (P.entries.colwise().sum().array() - 1.0).abs().maxCoeff());
      }
    require(o, drift <= 1e-10, fmt("column sum drift %.2e", drift));

    for (const char* m : {"logistic", "doubling", "tent"}) {
      auto P = build_ulam(MapSpec::from_string(m), parse_kernel("gaussian:0.05:wrap"), 256);
      auto s = power_iterate(P, 1e-10);
      residual = std::max(residual, (P.entries * s.density - s.density).lpNorm<1>());
    }
    require(o, residual <= 1e-10, fmt("post-solve residual %.2e", residual));

    bool monotone = true, lag_ok = true;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Eigen::MatrixXd R = oracle::random_stochastic(8, seed).transpose();
      auto W = ChannelMatrix::from_rows(R);
      auto r = capacity(W, 1e-5);
      for (std::size_t i = 1; i < r.lower_bounds.size(); ++i) monotone &= r.lower_bounds[i] >= r.lower_bounds[i - 1] - 1e-13;
      // compare against the certified upper bound of the previous lag
      CapacityResult prev = r;
      for (std::size_t k = 2; k <= 4; ++k) {
        auto c = capacity_at_lag(W, k, 1e-5);
        lag_ok &= c.capacity_bits <= prev.capacity_bits + prev.certified_slack;
        prev = c;
      }
    }
    require(o, monotone, "Blahut-Arimoto lower bounds decreased");
    require(o, lag_ok, "lag capacity increased");

    const std::vector<std::string> args = {"invariant", "--map", "logistic", "--kernel", "gaussian:0.05:wrap",
                                           "--bins", "128", "--mc-steps", "50000", "--seed", "11"};
    bool same = run_cli_stable(args) == run_cli_stable(args);
    require(o, same, "CLI output differs between identical runs");
    o.detail = fmt("drift %.1e, residual %.1e", drift, residual) + (monotone ? ", BA monotone" : "") +
               (lag_ok ? ", lag non-increasing" : "") + (same ? ", CLI identical" : "") + (o.pass ? "" : " | " + o.detail);
    return o;
  });

  std::printf("%d of 8 criteria failed\n", failures);
  return failures;
}
