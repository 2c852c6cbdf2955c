#include "ergokit/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "ergokit/errors.hpp"
#include "ergokit/log.hpp"
#include "ergokit/parallel.hpp"

namespace ergokit {
namespace {

constexpr double kNegativeFloor = 1e-14;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Merged, sorted bin index ranges [first, last] touched by the kernel support.
std::vector<std::pair<std::size_t, std::size_t>> support_bins(const NoiseKernel& kernel, double center,
                                                              std::size_t n_bins) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  const double n = static_cast<double>(n_bins);
  for (auto [lo, hi] : kernel_support(kernel, center)) {
    auto first = static_cast<std::size_t>(std::clamp(std::floor(lo * n), 0.0, n - 1.0));
    auto last = static_cast<std::size_t>(std::clamp(std::ceil(hi * n) - 1.0, 0.0, n - 1.0));
    ranges.emplace_back(first, std::max(first, last));
  }
  std::sort(ranges.begin(), ranges.end());
  std::vector<std::pair<std::size_t, std::size_t>> merged;
  for (auto r : ranges) {
    if (!merged.empty() && r.first <= merged.back().second + 1)
      merged.back().second = std::max(merged.back().second, r.second);
    else
      merged.push_back(r);
  }
  return merged;
}

// out += scale * (column i of the Ulam matrix).
template <typename Out>
void accumulate_ulam_column(const MapSpec& map, const NoiseKernel& kernel, std::size_t n_bins,
                            const GaussLegendreRule& rule, std::size_t i, double scale, Out&& out,
                            double* most_negative = nullptr) {
  const double h = 1.0 / static_cast<double>(n_bins);
  const double left = static_cast<double>(i) * h;
  std::vector<double> cdf;
  for (std::size_t a = 0; a < rule.order(); ++a) {
    double x = left + 0.5 * h * (rule.nodes[a] + 1.0);
    double c = eval_map(map, x);
    double w = 0.5 * rule.weights[a] * scale;
    for (auto [first, last] : support_bins(kernel, c, n_bins)) {
      cdf.resize(last - first + 2);
      for (std::size_t j = first; j <= last + 1; ++j)
        cdf[j - first] = kernel_cdf(kernel, c, static_cast<double>(j) * h);
      for (std::size_t j = first; j <= last; ++j) {
        double m = cdf[j - first + 1] - cdf[j - first];
        if (m < 0.0) {
          if (most_negative != nullptr) *most_negative = std::min(*most_negative, m);
          m = 0.0;
        }
        out(static_cast<Eigen::Index>(j)) += w * m;
      }
    }
  }
}

void check_bins(std::size_t n_bins, std::size_t quad_order) {
  if (n_bins < 2) throw InvalidArgument("n_bins must be at least 2");
  if (quad_order < 2) throw InvalidArgument("quad_order must be at least 2");
}

}  // namespace

GridDensity GridDensity::uniform(std::size_t n_bins) {
  GridDensity d;
  d.masses = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_bins), 1.0 / static_cast<double>(n_bins));
  return d;
}

double GridDensity::density(double x) const {
  auto n = static_cast<double>(masses.size());
  auto j = static_cast<Eigen::Index>(std::clamp(std::floor(x * n), 0.0, n - 1.0));
  return masses(j) * n;
}

double GridDensity::mass(double a, double b) const {
  a = std::clamp(a, 0.0, 1.0);
  b = std::clamp(b, 0.0, 1.0);
  if (b <= a) return 0.0;
  const auto n = static_cast<double>(masses.size());
  auto ja = static_cast<Eigen::Index>(std::min(std::floor(a * n), n - 1.0));
  auto jb = static_cast<Eigen::Index>(std::min(std::floor(b * n), n - 1.0));
  if (ja == jb) return masses(ja) * (b - a) * n;
  double sum = masses(ja) * (static_cast<double>(ja + 1) - a * n);
  for (Eigen::Index j = ja + 1; j < jb; ++j) sum += masses(j);
  sum += masses(jb) * (b * n - static_cast<double>(jb));
  return sum;
}

PiecewisePolyDensity PiecewisePolyDensity::constant(std::size_t pieces, std::size_t terms) {
  PiecewisePolyDensity d;
  d.pieces = pieces;
  d.terms = terms;
  d.coeffs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pieces * terms));
  for (std::size_t p = 0; p < pieces; ++p) d.coeffs(static_cast<Eigen::Index>(p * terms)) = 1.0;
  return d;
}

double PiecewisePolyDensity::evaluate(double y) const {
  const double m = static_cast<double>(pieces);
  auto p = static_cast<std::size_t>(std::clamp(std::floor(y * m), 0.0, m - 1.0));
  double t = 2.0 * (y * m - static_cast<double>(p)) - 1.0;
  std::vector<double> P(terms);
  legendre_values(t, P);
  double sum = 0.0;
  for (std::size_t k = 0; k < terms; ++k) sum += coeffs(static_cast<Eigen::Index>(p * terms + k)) * P[k];
  return sum;
}

double PiecewisePolyDensity::integral(double a, double b) const {
  a = std::clamp(a, 0.0, 1.0);
  b = std::clamp(b, 0.0, 1.0);
  if (b <= a) return 0.0;
  const double m = static_cast<double>(pieces);
  const double h = 1.0 / m;
  auto first = static_cast<std::size_t>(std::min(std::floor(a * m), m - 1.0));
  auto last = static_cast<std::size_t>(std::min(std::floor(b * m), m - 1.0));
  std::vector<double> Ia(terms), Ib(terms);
  double sum = 0.0;
  for (std::size_t p = first; p <= last; ++p) {
    double lo = std::max(a, static_cast<double>(p) * h);
    double hi = std::min(b, static_cast<double>(p + 1) * h);
    if (hi <= lo) continue;
    legendre_integrals(2.0 * (lo * m - static_cast<double>(p)) - 1.0, Ia);
    legendre_integrals(2.0 * (hi * m - static_cast<double>(p)) - 1.0, Ib);
    for (std::size_t k = 0; k < terms; ++k)
      sum += 0.5 * h * coeffs(static_cast<Eigen::Index>(p * terms + k)) * (Ib[k] - Ia[k]);
  }
  return sum;
}

Eigen::VectorXd PiecewisePolyDensity::bin_masses(std::size_t n_bins) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(n_bins));
  const double h = 1.0 / static_cast<double>(n_bins);
  for (std::size_t j = 0; j < n_bins; ++j)
    out(static_cast<Eigen::Index>(j)) = integral(static_cast<double>(j) * h, static_cast<double>(j + 1) * h);
  return out;
}

Eigen::VectorXd TransferMatrix::mass_functional() const {
  if (representation == Representation::Ulam) return Eigen::VectorXd::Ones(dim());
  Eigen::VectorXd ell = Eigen::VectorXd::Zero(dim());
  const std::size_t terms = metadata.degree + 1;
  const double h = 1.0 / static_cast<double>(metadata.pieces);
  for (std::size_t p = 0; p < metadata.pieces; ++p) ell(static_cast<Eigen::Index>(p * terms)) = h;
  return ell;
}

TransferMatrix build_ulam(const MapSpec& map, const NoiseKernel& kernel, std::size_t n_bins,
                          std::size_t quad_order) {
  check_bins(n_bins, quad_order);
  const auto n = static_cast<Eigen::Index>(n_bins);
  const auto& rule = gauss_legendre(quad_order);

  TransferMatrix P;
  P.entries = Eigen::MatrixXd::Zero(n, n);
  P.representation = Representation::Ulam;
  P.metadata.map_id = map.id();
  P.metadata.kernel = describe(kernel);
  P.metadata.epsilon = kernel.epsilon;
  P.metadata.n_bins = n_bins;
  P.metadata.quad_order = quad_order;

  std::vector<double> negatives(n_bins, 0.0);
  parallel_for(n_bins, [&](std::size_t i) {
    auto column = P.entries.col(static_cast<Eigen::Index>(i));
    accumulate_ulam_column(map, kernel, n_bins, rule, i, 1.0, column, &negatives[i]);
  });

  double worst = *std::min_element(negatives.begin(), negatives.end());
  if (worst < -kNegativeFloor) {
    std::string msg = "ulam: clipped negative bin mass " + fmt(worst);
    P.metadata.warnings.push_back(msg);
    log_message(LogLevel::Warning, msg);
  }
  double drift = (P.entries.colwise().sum().array() - 1.0).abs().maxCoeff();
  if (drift > 1e-10) {
    std::string msg = "ulam: column sums deviate from 1 by " + fmt(drift);
    P.metadata.warnings.push_back(msg);
    log_message(LogLevel::Warning, msg);
  }
  return P;
}

TransferMatrix build_piecewise(const MapSpec& map, const NoiseKernel& kernel, double piece_width,
                               std::size_t K, std::size_t quad_order) {
  if (kernel.family != KernelFamily::Gaussian)
    throw NotImplemented("piecewise-polynomial transfer requires gaussian noise");
  if (K < 1) throw InvalidArgument("K must be at least 1");
  if (!(piece_width > 0.0 && piece_width <= 1.0)) throw InvalidArgument("piece_width must lie in (0, 1]");
  if (quad_order < 2) throw InvalidArgument("quad_order must be at least 2");

  const auto pieces = static_cast<std::size_t>(std::max(1.0, std::round(1.0 / piece_width)));
  const std::size_t terms = K + 1;
  const double h = 1.0 / static_cast<double>(pieces);
  const auto D = static_cast<Eigen::Index>(pieces * terms);

  TransferMatrix P;
  P.representation = Representation::PiecewisePoly;
  P.stochastic = false;
  P.metadata.map_id = map.id();
  P.metadata.kernel = describe(kernel);
  P.metadata.epsilon = kernel.epsilon;
  P.metadata.pieces = pieces;
  P.metadata.degree = K;
  P.metadata.quad_order = quad_order;

  // Slope estimate and discontinuity scan on a fine grid. With wrapped noise
  // a jump by an integer is continuous on the circle.
  constexpr std::size_t kScan = 4000;
  double slope = 1.0;
  double prev = eval_map(map, 0.0);
  for (std::size_t s = 1; s <= kScan; ++s) {
    double x = static_cast<double>(s) / kScan;
    double y = eval_map(map, x);
    double d = y - prev;
    if (kernel.boundary == Boundary::Wrap) d -= std::round(d);
    prev = y;
    if (std::fabs(d) > 0.02) {
      std::string msg = "SmoothnessWarning: map appears discontinuous near x=" + fmt(x);
      if (P.metadata.warnings.empty() || P.metadata.warnings.back() != msg) {
        P.metadata.warnings.push_back(msg);
        log_message(LogLevel::Warning, msg);
      }
      continue;
    }
    slope = std::max(slope, std::fabs(d) * kScan);
  }

  const std::size_t order = std::max(quad_order, K + 2);
  const auto& rule = gauss_legendre(order);
  const auto sub_x = static_cast<std::size_t>(std::max(1.0, std::ceil(4.0 * h * slope / kernel.epsilon)));
  const auto sub_y = static_cast<std::size_t>(std::max(1.0, std::ceil(4.0 * h / kernel.epsilon)));

  struct Nodes {
    std::vector<double> pos, weight, local;
    std::vector<std::size_t> piece;
  };
  auto make_nodes = [&](std::size_t sub) {
    Nodes nodes;
    const double cell = h / static_cast<double>(sub);
    for (std::size_t p = 0; p < pieces; ++p)
      for (std::size_t s = 0; s < sub; ++s)
        for (std::size_t a = 0; a < rule.order(); ++a) {
          double x = static_cast<double>(p) * h + (static_cast<double>(s) + 0.5 * (rule.nodes[a] + 1.0)) * cell;
          nodes.pos.push_back(x);
          nodes.weight.push_back(0.5 * cell * rule.weights[a]);
          nodes.local.push_back(2.0 * (x - static_cast<double>(p) * h) / h - 1.0);
          nodes.piece.push_back(p);
        }
    return nodes;
  };
  const Nodes xs = make_nodes(sub_x);
  const Nodes ys = make_nodes(sub_y);
  const auto Nx = static_cast<Eigen::Index>(xs.pos.size());
  const auto Ny = static_cast<Eigen::Index>(ys.pos.size());

  // Source side: weighted basis values; target side: projection functionals.
  Eigen::MatrixXd source = Eigen::MatrixXd::Zero(Nx, D);
  Eigen::MatrixXd target = Eigen::MatrixXd::Zero(Ny, D);
  std::vector<double> legendre(terms);
  for (Eigen::Index a = 0; a < Nx; ++a) {
    legendre_values(xs.local[a], legendre);
    for (std::size_t k = 0; k < terms; ++k)
      source(a, static_cast<Eigen::Index>(xs.piece[a] * terms + k)) = xs.weight[a] * legendre[k];
  }
  for (Eigen::Index b = 0; b < Ny; ++b) {
    legendre_values(ys.local[b], legendre);
    for (std::size_t k = 0; k < terms; ++k)
      target(b, static_cast<Eigen::Index>(ys.piece[b] * terms + k)) =
          (2.0 * static_cast<double>(k) + 1.0) / h * ys.weight[b] * legendre[k];
  }

  Eigen::MatrixXd kernel_values(Ny, Nx);
  parallel_for(static_cast<std::size_t>(Nx), [&](std::size_t a) {
    double c = eval_map(map, xs.pos[a]);
    for (Eigen::Index b = 0; b < Ny; ++b)
      kernel_values(b, static_cast<Eigen::Index>(a)) = kernel_density(kernel, c, ys.pos[b]);
  });

  P.entries = target.transpose() * (kernel_values * source);

  Eigen::VectorXd ell = P.mass_functional();
  double drift = (ell.transpose() * P.entries - ell.transpose()).cwiseAbs().maxCoeff();
  if (drift > 1e-8) {
    std::string msg = "piecewise: mass functional drift " + fmt(drift);
    P.metadata.warnings.push_back(msg);
    log_message(LogLevel::Warning, msg);
  }
  return P;
}

Eigen::VectorXd apply(const TransferMatrix& P, const Eigen::VectorXd& rho) {
  if (rho.size() != P.dim())
    throw DimensionMismatch("density has dimension " + std::to_string(rho.size()) + ", operator " +
                            std::to_string(P.dim()));
  Eigen::VectorXd out = P.entries * rho;
  Eigen::VectorXd ell = P.mass_functional();
  double before = ell.dot(rho);
  double after = ell.dot(out);
  if (std::fabs(after - before) > 1e-12 && after != 0.0) {
    log_message(LogLevel::Info, "apply: renormalized mass drift " + fmt(after - before));
    out *= before / after;
  }
  return out;
}

GridDensity apply(const TransferMatrix& P, const GridDensity& rho) {
  if (P.representation != Representation::Ulam)
    throw DimensionMismatch("grid density requires an Ulam operator");
  GridDensity out;
  out.masses = apply(P, rho.masses);
  return out;
}

PiecewisePolyDensity apply(const TransferMatrix& P, const PiecewisePolyDensity& rho) {
  if (P.representation != Representation::PiecewisePoly || rho.pieces != P.metadata.pieces ||
      rho.terms != P.metadata.degree + 1)
    throw DimensionMismatch("piecewise density does not match the operator layout");
  PiecewisePolyDensity out = rho;
  out.coeffs = apply(P, rho.coeffs);
  return out;
}

void write_matrix_csv(std::ostream& out, const TransferMatrix& P) {
  out << "# representation: " << (P.representation == Representation::Ulam ? "ulam" : "piecewise-poly")
      << "\n# map: " << P.metadata.map_id << "\n# kernel: " << P.metadata.kernel
      << "\n# epsilon: " << P.metadata.epsilon << "\n# dim: " << P.dim() << '\n';
  if (P.representation == Representation::Ulam)
    out << "# n_bins: " << P.metadata.n_bins << '\n';
  else
    out << "# pieces: " << P.metadata.pieces << "\n# K: " << P.metadata.degree << '\n';
  out << "# quad_order: " << P.metadata.quad_order << '\n';
  char buf[32];
  for (Eigen::Index r = 0; r < P.dim(); ++r) {
    for (Eigen::Index c = 0; c < P.dim(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", P.entries(r, c));
      if (c > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

UlamOperator::UlamOperator(MapSpec map, NoiseKernel kernel, std::size_t n_bins, std::size_t quad_order)
    : map_(std::move(map)), kernel_(kernel), n_bins_(n_bins), quad_order_(quad_order) {
  check_bins(n_bins, quad_order);
}

double UlamOperator::entry(std::size_t row, std::size_t col) const {
  const auto& rule = gauss_legendre(quad_order_);
  const double h = 1.0 / static_cast<double>(n_bins_);
  double sum = 0.0;
  for (std::size_t a = 0; a < rule.order(); ++a) {
    double x = static_cast<double>(col) * h + 0.5 * h * (rule.nodes[a] + 1.0);
    double c = eval_map(map_, x);
    sum += 0.5 * rule.weights[a] *
           kernel_mass(kernel_, c, static_cast<double>(row) * h, static_cast<double>(row + 1) * h);
  }
  return sum;
}

void UlamOperator::apply(const Eigen::VectorXd& in, Eigen::VectorXd& out) const {
  if (in.size() != dim() || out.size() != dim()) throw DimensionMismatch("UlamOperator::apply size mismatch");
  const auto& rule = gauss_legendre(quad_order_);
  out.setZero();
  for (std::size_t i = 0; i < n_bins_; ++i) {
    double w = in(static_cast<Eigen::Index>(i));
    if (w == 0.0) continue;
    accumulate_ulam_column(map_, kernel_, n_bins_, rule, i, w, out);
  }
}

}  // namespace ergokit
