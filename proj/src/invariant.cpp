#include "ergokit/invariant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "ergokit/errors.hpp"
#include "ergokit/log.hpp"
#include "ergokit/quadrature.hpp"

namespace ergokit {
namespace {

constexpr double kEntryFloor = 1e-14;
constexpr double kExclusion = 1e-8;
constexpr Eigen::Index kDenseGapLimit = 512;
constexpr std::size_t kGapStallIterations = 1000;

Eigen::VectorXd default_init(const TransferMatrix& P) {
  if (P.representation == Representation::Ulam)
    return Eigen::VectorXd::Constant(P.dim(), 1.0 / static_cast<double>(P.dim()));
  return PiecewisePolyDensity::constant(P.metadata.pieces, P.metadata.degree + 1).coeffs;
}

double tv(const Eigen::VectorXd& v) { return 0.5 * v.lpNorm<1>(); }

// Tarjan's algorithm, iterative. Returns component id per vertex; ids are
// assigned in reverse topological order of the condensation.
std::vector<std::size_t> strongly_connected(const std::vector<std::vector<std::size_t>>& adj,
                                            std::size_t& count) {
  const std::size_t n = adj.size();
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // (vertex, next edge)
  std::size_t next_index = 0;
  count = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.emplace_back(root, 0);
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, e] = call.back();
      if (e < adj[v].size()) {
        std::size_t w = adj[v][e++];
        if (index[w] == kUnset) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      std::size_t done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
      if (low[done] == index[done]) {
        for (;;) {
          std::size_t w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = count;
          if (w == done) break;
        }
        ++count;
      }
    }
  }
  return comp;
}

// ln|T'(x)| with a stencil that never crosses a singular point or the ends.
double log_abs_derivative(const MapSpec& map, double x, const std::vector<double>& singular) {
  double h = std::min({1e-5, 0.5 * x, 0.5 * (1.0 - x)});
  for (double s : singular) h = std::min(h, 0.5 * std::fabs(x - s));
  double d = eval_map_derivative(map, x, h);
  if (std::fabs(d) < 1e-300)
    throw SingularIntegrand("|T'| vanishes at x=" + std::to_string(x) + " on a set of positive mass");
  return std::log(std::fabs(d));
}

std::vector<double> singular_points(const MapSpec& map, const std::vector<double>& extra) {
  std::vector<double> pts = map.nonsmooth_points();
  pts.insert(pts.end(), extra.begin(), extra.end());
  std::erase_if(pts, [](double s) { return !(s > 0.0 && s < 1.0); });
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

// Segments of [a, b] with the exclusion windows around singular points
// removed; the flags mark ends that touch an exclusion window.
struct Segment {
  double lo, hi;
  bool grade_lo, grade_hi;
};

std::vector<Segment> segments(double a, double b, const std::vector<double>& singular, bool grade_ends) {
  std::vector<Segment> out;
  double lo = a;
  bool grade_lo = grade_ends;
  for (double s : singular) {
    if (s + kExclusion <= a || s - kExclusion >= b) continue;
    double cut = std::max(a, s - kExclusion);
    if (cut > lo) out.push_back({lo, cut, grade_lo, true});
    lo = std::min(b, s + kExclusion);
    grade_lo = true;
  }
  if (b > lo) out.push_back({lo, b, grade_lo, grade_ends});
  return out;
}

Rational round_dyadic(double value, double delta) {
  int k = static_cast<int>(std::ceil(std::log2(1.0 / delta)));
  k = std::clamp(k, 0, 60);
  const std::int64_t den = std::int64_t{1} << k;
  auto num = static_cast<std::int64_t>(std::llround(value * static_cast<double>(den)));
  num = std::clamp<std::int64_t>(num, 0, den);
  std::int64_t g = std::gcd(num, den);
  if (g == 0) g = den;
  return {num / g, den / g};
}

void check_query(double a, double b, double delta) {
  if (!(a >= 0.0 && a < b && b <= 1.0)) throw InvalidArgument("measure_query needs 0 <= a < b <= 1");
  if (!(delta > 0.0)) throw InvalidArgument("measure_query needs delta > 0");
}

}  // namespace

double residual_norm(const TransferMatrix& P, const Eigen::VectorXd& v) {
  if (P.representation == Representation::Ulam) return v.lpNorm<1>();
  return v.lpNorm<1>() / static_cast<double>(P.metadata.pieces);
}

StationaryResult power_iterate(const TransferMatrix& P, const Eigen::VectorXd& init, double tol,
                               std::size_t max_iter) {
  if (!(tol > 0.0)) throw InvalidArgument("power_iterate needs tol > 0");
  if (init.size() != P.dim()) throw DimensionMismatch("initial density does not match operator dimension");
  const Eigen::VectorXd ell = P.mass_functional();
  double mass = ell.dot(init);
  if (!(mass > 0.0)) throw InvalidArgument("initial density has non-positive mass");

  StationaryResult result;
  result.representation = P.representation;
  Eigen::VectorXd rho = init / mass;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t it = 0;; ++it) {
    Eigen::VectorXd next = P.entries * rho;
    double r = residual_norm(P, next - rho);
    if (r <= tol) {
      result.density = std::move(rho);
      result.residual = r;
      result.iterations = it;
      if (std::isfinite(previous) && previous > 0.0) result.gap_estimate = std::clamp(1.0 - r / previous, 0.0, 1.0);
      return result;
    }
    if (it >= max_iter) throw NotConverged("power iteration did not converge", r, it);
    previous = r;
    rho = next / ell.dot(next);
  }
}

StationaryResult power_iterate(const TransferMatrix& P, double tol, std::size_t max_iter) {
  return power_iterate(P, default_init(P), tol, max_iter);
}

GridDensity as_grid(const StationaryResult& result) {
  if (result.representation != Representation::Ulam)
    throw InvalidArgument("as_grid needs an Ulam stationary result");
  GridDensity g;
  g.masses = result.density.cwiseMax(0.0);
  g.masses /= g.masses.sum();
  g.error_bound = result.residual;
  return g;
}

PiecewisePolyDensity as_piecewise(const StationaryResult& result, const TransferMatrix& P) {
  if (result.representation != Representation::PiecewisePoly || P.representation != Representation::PiecewisePoly)
    throw InvalidArgument("as_piecewise needs a piecewise-polynomial result");
  PiecewisePolyDensity d;
  d.pieces = P.metadata.pieces;
  d.terms = P.metadata.degree + 1;
  d.coeffs = result.density;
  return d;
}

namespace {

// Full spectrum with one eigenvalue at 1 removed; what is left is the
// spectrum on ker(ell).
double dense_gap(const TransferMatrix& P) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(P.entries, false);
  if (solver.info() != Eigen::Success) throw NotConverged("dense eigenvalue solve failed", 1.0, 0);
  const Eigen::VectorXcd ev = solver.eigenvalues();
  Eigen::Index top = 0;
  (ev.array() - 1.0).abs().minCoeff(&top);
  double modulus = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (i != top) modulus = std::max(modulus, std::abs(ev(i)));
  return std::clamp(1.0 - modulus, 0.0, 1.0);
}

}  // namespace

double spectral_gap(const TransferMatrix& P, double tol, std::size_t max_iter) {
  const Eigen::Index n = P.dim();
  if (n < 2) return 1.0;
  const Eigen::VectorXd ell = P.mass_functional().normalized();
  const Eigen::Index block = std::min<Eigen::Index>(8, n - 1);

  auto project = [&](Eigen::MatrixXd& m) { m -= ell * (ell.transpose() * m); };
  auto orthonormalize = [&](const Eigen::MatrixXd& m) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
    project(q);
    return Eigen::MatrixXd(Eigen::HouseholderQR<Eigen::MatrixXd>(q).householderQ() *
                           Eigen::MatrixXd::Identity(n, block));
  };

  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd Q = Eigen::MatrixXd::NullaryExpr(n, block, [&] { return unif(rng); });
  project(Q);
  Q = orthonormalize(Q);

  double estimate = std::numeric_limits<double>::quiet_NaN();
  int stable = 0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    // Ritz values of strongly non-normal matrices (noisy expanding maps give
    // nearly nilpotent Ulam matrices) wander instead of settling.
    if (it == kGapStallIterations && n <= kDenseGapLimit) {
      log_message(LogLevel::Info, "spectral_gap: block iteration stalled, using a dense eigenvalue solve");
      return dense_gap(P);
    }
    Eigen::MatrixXd Z = P.entries * Q;
    project(Z);
    if (Z.norm() < 1e-280) return 1.0;
    Eigen::MatrixXd H = Q.transpose() * Z;
    double modulus = H.eigenvalues().cwiseAbs().maxCoeff();
    if (std::fabs(modulus - estimate) <= 1e-2 * tol) {
      if (++stable >= 5) return std::clamp(1.0 - modulus, 0.0, 1.0);
    } else {
      stable = 0;
    }
    estimate = modulus;
    Q = orthonormalize(Z);
  }
  throw NotConverged("spectral gap iteration did not converge", estimate, max_iter);
}

double doeblin_lower_bound(const MapSpec& map, const NoiseKernel& kernel, std::size_t grid) {
  if (grid < 2) throw InvalidArgument("doeblin_lower_bound needs grid >= 2");
  std::vector<double> centers;
  for (std::size_t i = 0; i < grid; ++i)
    centers.push_back(eval_map(map, static_cast<double>(i) / static_cast<double>(grid - 1)));
  std::sort(centers.begin(), centers.end());
  centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
  if (centers.size() < 2) return 1.0;

  const auto& rule = gauss_legendre(8);
  const auto panels = static_cast<std::size_t>(std::max(256.0, std::ceil(40.0 / kernel.epsilon)));
  const double width = 1.0 / static_cast<double>(panels);
  std::vector<double> ys, ws;
  for (std::size_t p = 0; p < panels; ++p)
    for (std::size_t a = 0; a < rule.order(); ++a) {
      ys.push_back((static_cast<double>(p) + 0.5 * (rule.nodes[a] + 1.0)) * width);
      ws.push_back(0.5 * width * rule.weights[a]);
    }

  Eigen::MatrixXd q(static_cast<Eigen::Index>(centers.size()), static_cast<Eigen::Index>(ys.size()));
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (std::size_t b = 0; b < ys.size(); ++b)
      q(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(b)) = kernel_density(kernel, centers[c], ys[b]);
  const Eigen::Map<const Eigen::VectorXd> weights(ws.data(), static_cast<Eigen::Index>(ws.size()));

  double best = 1.0;
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    for (Eigen::Index j = i + 1; j < q.rows(); ++j)
      best = std::min(best, q.row(i).cwiseMin(q.row(j)).dot(weights));
  return std::clamp(best, 0.0, 1.0);
}

Eigen::VectorXd ErgodicComponent::embed(Eigen::Index n) const {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
  for (std::size_t s = 0; s < states.size(); ++s)
    full(static_cast<Eigen::Index>(states[s])) = density(static_cast<Eigen::Index>(s));
  return full;
}

ErgodicDecomposition ergodic_components(const TransferMatrix& P, double support_threshold) {
  if (P.representation != Representation::Ulam)
    throw InvalidArgument("ergodic_components needs an Ulam (stochastic) operator");
  if (!(support_threshold >= 0.0)) throw InvalidArgument("support_threshold must be >= 0");
  const double cut = std::max(support_threshold, kEntryFloor);
  const auto n = static_cast<std::size_t>(P.dim());

  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (P.entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) > cut) adj[i].push_back(j);

  std::size_t count = 0;
  std::vector<std::size_t> comp = strongly_connected(adj, count);
  std::vector<bool> closed(count, true);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : adj[i])
      if (comp[j] != comp[i]) closed[comp[i]] = false;

  ErgodicDecomposition out;
  out.threshold = support_threshold;
  std::vector<std::vector<std::size_t>> members(count);
  for (std::size_t i = 0; i < n; ++i) members[comp[i]].push_back(i);

  for (std::size_t c = 0; c < count; ++c) {
    if (!closed[c]) continue;
    const auto& states = members[c];
    const auto m = static_cast<Eigen::Index>(states.size());
    TransferMatrix sub;
    sub.representation = Representation::Ulam;
    sub.entries.resize(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) {
        double v = P.entries(static_cast<Eigen::Index>(states[a]), static_cast<Eigen::Index>(states[b]));
        sub.entries(a, b) = v > cut ? v : 0.0;
      }
    for (Eigen::Index b = 0; b < m; ++b) sub.entries.col(b) /= sub.entries.col(b).sum();

    StationaryResult stat;
    try {
      stat = power_iterate(sub, 1e-10, 200000);
    } catch (const NotConverged&) {
      // Periodic class: the lazy chain (I + S)/2 has the same stationary law.
      sub.entries = 0.5 * (sub.entries + Eigen::MatrixXd::Identity(m, m));
      stat = power_iterate(sub, 1e-10, 400000);
    }
    ErgodicComponent component;
    component.states = states;
    component.density = stat.density;
    component.residual = stat.residual;
    out.components.push_back(std::move(component));
  }
  std::sort(out.components.begin(), out.components.end(),
            [](const auto& a, const auto& b) { return a.states.front() < b.states.front(); });
  return out;
}

Rational measure_query(const GridDensity& rho, double a, double b, double delta) {
  check_query(a, b, delta);
  if (a <= 0.0 && b >= 1.0) return {1, 1};
  const double n = static_cast<double>(rho.n_bins());
  double bound = rho.error_bound;
  for (double end : {a, b}) {
    double pos = end * n;
    if (pos > 0.0 && pos < n && pos != std::floor(pos))
      bound += rho.masses(static_cast<Eigen::Index>(std::floor(pos)));
  }
  if (bound > 0.5 * delta)
    throw ResolutionTooCoarse("density resolution error " + std::to_string(bound) + " exceeds delta/2");
  return round_dyadic(std::clamp(rho.mass(a, b), 0.0, 1.0), delta);
}

Rational measure_query(const GridDensity& rho, Rational a, Rational b, Rational delta) {
  return measure_query(rho, a.value(), b.value(), delta.value());
}

Rational measure_query(const PiecewisePolyDensity& rho, double a, double b, double delta, double error_bound) {
  check_query(a, b, delta);
  if (error_bound > 0.5 * delta)
    throw ResolutionTooCoarse("density error bound " + std::to_string(error_bound) + " exceeds delta/2");
  if (a <= 0.0 && b >= 1.0) return {1, 1};
  return round_dyadic(std::clamp(rho.integral(a, b) / rho.total(), 0.0, 1.0), delta);
}

MixingResult mixing_time(const TransferMatrix& P, double target) {
  if (!(target > 0.0 && target < 1.0)) throw InvalidArgument("mixing target must lie in (0, 1)");
  if (P.representation != Representation::Ulam) throw InvalidArgument("mixing_time needs an Ulam operator");
  if (ergodic_components(P).components.size() != 1)
    throw NotMixing("chain has more than one ergodic component");
  const Eigen::Index n = P.dim();

  MixingResult result;
  double widest = -1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d = 0.5 * (P.entries.col(i) - P.entries.col(j)).lpNorm<1>();
      if (d > widest) {
        widest = d;
        result.first_state = static_cast<std::size_t>(i);
        result.second_state = static_cast<std::size_t>(j);
      }
    }

  Eigen::VectorXd diff = Eigen::VectorXd::Zero(n);
  diff(static_cast<Eigen::Index>(result.first_state)) = 1.0;
  diff(static_cast<Eigen::Index>(result.second_state)) = -1.0;

  // Doubling search over t = 2^k, then binary descent using the stored powers.
  constexpr int kMaxDoublings = 62;
  std::vector<Eigen::MatrixXd> powers{P.entries};
  Eigen::VectorXd below = diff;  // P^(2^(k-1)) diff, distance still above target
  Eigen::VectorXd current = P.entries * diff;
  int k = 0;
  while (tv(current) > target) {
    if (k + 1 >= kMaxDoublings) throw NotMixing("distance did not fall below target");
    below = current;
    powers.push_back(powers.back() * powers.back());
    ++k;
    current = powers.back() * diff;
  }
  std::size_t steps = 0;
  if (k > 0) {
    steps = std::size_t{1} << (k - 1);
    Eigen::VectorXd v = below;
    for (int j = k - 2; j >= 0; --j) {
      Eigen::VectorXd w = powers[static_cast<std::size_t>(j)] * v;
      if (tv(w) > target) {
        v = std::move(w);
        steps += std::size_t{1} << j;
      }
    }
  }
  result.steps = steps + 1;

  try {
    result.gap = spectral_gap(P);
  } catch (const NotConverged& e) {
    log_message(LogLevel::Warning, "mixing_time: gap estimate did not converge");
    result.gap = std::clamp(1.0 - e.residual(), 0.0, 1.0);
  }
  result.gap_bound_steps = result.gap > 0.0 ? std::log(1.0 / target) / result.gap
                                            : std::numeric_limits<double>::infinity();
  return result;
}

double lyapunov_exponent(const MapSpec& map, const GridDensity& rho, std::size_t quad_order,
                         const std::vector<double>& extra_singular) {
  const auto singular = singular_points(map, extra_singular);
  const double h = rho.bin_width();
  auto integrand = [&](double x) { return log_abs_derivative(map, x, singular); };
  double sum = 0.0;
  for (std::size_t i = 0; i < rho.n_bins(); ++i) {
    double m = rho.masses(static_cast<Eigen::Index>(i));
    if (m <= 0.0) continue;
    double lo = static_cast<double>(i) * h;
    double inner = 0.0;
    for (const auto& seg : segments(lo, lo + h, singular, false))
      inner += integrate_graded(integrand, seg.lo, seg.hi, quad_order, seg.grade_lo, seg.grade_hi);
    sum += m / h * inner;
  }
  return sum;
}

double lyapunov_exponent(const MapSpec& map, const std::function<double(double)>& density,
                         std::size_t quad_order, const std::vector<double>& extra_singular) {
  const auto singular = singular_points(map, extra_singular);
  auto integrand = [&](double x) {
    double w = density(x);
    if (w == 0.0) return 0.0;
    return w * log_abs_derivative(map, x, singular);
  };
  double sum = 0.0;
  for (const auto& seg : segments(0.0, 1.0, singular, true))
    sum += integrate_graded(integrand, seg.lo, seg.hi, quad_order, seg.grade_lo, seg.grade_hi);
  return sum;
}

}  // namespace ergokit
