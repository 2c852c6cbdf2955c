#include "ergokit/memory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ergokit/errors.hpp"
#include "ergokit/log.hpp"
#include "ergokit/parallel.hpp"
#include "ergokit/transfer.hpp"

namespace ergokit {
namespace {

struct SparseRow {
  std::vector<Eigen::Index> cols;
  std::vector<double> values;
  std::vector<double> log_values;  // log2
};

std::vector<SparseRow> sparse_rows(const ChannelMatrix& W) {
  std::vector<SparseRow> rows(W.n_states());
  for (Eigen::Index i = 0; i < W.rows.rows(); ++i) {
    auto& row = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < W.rows.cols(); ++j) {
      double w = W.rows(i, j);
      if (w > 0.0) {
        row.cols.push_back(j);
        row.values.push_back(w);
        row.log_values.push_back(std::log2(w));
      }
    }
  }
  return rows;
}

// D(W_i || q) in bits for every row.
Eigen::VectorXd divergences(const std::vector<SparseRow>& rows, const Eigen::VectorXd& q) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    double sum = 0.0;
    for (std::size_t e = 0; e < row.cols.size(); ++e)
      sum += row.values[e] * (row.log_values[e] - std::log2(q(row.cols[e])));
    d(static_cast<Eigen::Index>(i)) = sum;
  }
  return d;
}

Eigen::MatrixXd row_stochastic_power(const Eigen::MatrixXd& W, std::size_t k) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(W.rows(), W.cols());
  Eigen::MatrixXd base = W;
  bool first = true;
  while (k > 0) {
    if (k & 1U) {
      result = first ? base : Eigen::MatrixXd(result * base);
      first = false;
    }
    k >>= 1U;
    if (k > 0) base = base * base;
  }
  double drift = (result.rowwise().sum().array() - 1.0).abs().maxCoeff();
  if (drift > 1e-12) log_message(LogLevel::Info, "capacity_at_lag: renormalized row drift " + std::to_string(drift));
  for (Eigen::Index i = 0; i < result.rows(); ++i) result.row(i) /= result.row(i).sum();
  return result;
}

}  // namespace

ChannelMatrix ChannelMatrix::from_rows(Eigen::MatrixXd rows) {
  if (rows.rows() != rows.cols() || rows.rows() < 1) throw DimensionMismatch("channel matrix must be square");
  if ((rows.array() < 0.0).any()) throw InvalidArgument("channel matrix has negative entries");
  double drift = (rows.rowwise().sum().array() - 1.0).abs().maxCoeff();
  if (drift > 1e-12) throw InvalidArgument("channel rows do not sum to 1 (drift " + std::to_string(drift) + ")");
  ChannelMatrix W;
  W.rows = std::move(rows);
  return W;
}

ChannelMatrix channel_matrix(const MapSpec& map, const NoiseKernel& kernel, std::size_t n_states,
                             std::size_t quad_order) {
  TransferMatrix P = build_ulam(map, kernel, n_states, quad_order);
  ChannelMatrix W;
  W.rows = P.entries.transpose();
  for (Eigen::Index i = 0; i < W.rows.rows(); ++i) W.rows.row(i) /= W.rows.row(i).sum();
  return W;
}

double mutual_information(const Eigen::VectorXd& mu, const ChannelMatrix& W) {
  if (mu.size() != W.rows.rows()) throw DimensionMismatch("input law does not match channel size");
  const Eigen::VectorXd q = W.rows.transpose() * mu;
  double info = 0.0;
  for (Eigen::Index i = 0; i < W.rows.rows(); ++i) {
    if (mu(i) <= 0.0) continue;
    double row = 0.0;
    for (Eigen::Index j = 0; j < W.rows.cols(); ++j) {
      double w = W.rows(i, j);
      if (w > 0.0) row += w * std::log2(w / q(j));
    }
    info += mu(i) * row;
  }
  return std::max(0.0, info);
}

CapacityResult capacity(const ChannelMatrix& W, double tol, std::size_t max_iter) {
  if (!(tol > 0.0)) throw InvalidArgument("capacity needs tol > 0");
  const auto rows = sparse_rows(W);
  const Eigen::Index n = W.rows.rows();
  const double ceiling = std::log2(static_cast<double>(n));

  CapacityResult result;
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (std::size_t it = 0;; ++it) {
    Eigen::VectorXd q = W.rows.transpose() * mu;
    Eigen::VectorXd d = divergences(rows, q);
    double lower = mu.dot(d);
    double upper = d.maxCoeff();
    if (!result.lower_bounds.empty() && lower < result.lower_bounds.back() - 1e-12)
      log_message(LogLevel::Warning, "Blahut-Arimoto: mutual information decreased");
    result.lower_bounds.push_back(lower);
    double slack = std::max(0.0, upper - lower);
    if (slack <= tol || it >= max_iter) {
      result.capacity_bits = std::clamp(lower, 0.0, ceiling);
      result.input_distribution = mu;
      result.iterations = it;
      result.certified_slack = slack;
      if (slack > tol) throw NotConverged("Blahut-Arimoto did not reach the requested slack", slack, it);
      return result;
    }
    Eigen::VectorXd weights = ((d.array() - upper) * std::numbers::ln2).exp();
    mu = mu.cwiseProduct(weights);
    mu /= mu.sum();
  }
}

CapacityResult capacity_at_lag(const ChannelMatrix& W, std::size_t k, double tol, std::size_t max_iter) {
  if (k < 1) throw InvalidArgument("lag must be at least 1");
  if (k == 1) return capacity(W, tol, max_iter);
  ChannelMatrix Wk;
  Wk.rows = row_stochastic_power(W.rows, k);
  return capacity(Wk, tol, max_iter);
}

CapacityResult memory_of_system(const MapSpec& map, const NoiseKernel& kernel, std::size_t n_states, double tol,
                                std::size_t quad_order, std::size_t max_iter) {
  return capacity(channel_matrix(map, kernel, n_states, quad_order), tol, max_iter);
}

std::size_t default_resolution(double epsilon) {
  return std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil(16.0 / epsilon)));
}

double fit_log_slope(const std::vector<ScalingRow>& rows) {
  if (rows.size() < 2) throw InvalidArgument("slope needs at least two points");
  double mx = 0.0, my = 0.0;
  for (const auto& r : rows) {
    mx += std::log2(1.0 / r.epsilon);
    my += r.capacity_bits;
  }
  mx /= static_cast<double>(rows.size());
  my /= static_cast<double>(rows.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& r : rows) {
    double dx = std::log2(1.0 / r.epsilon) - mx;
    sxy += dx * (r.capacity_bits - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw InvalidArgument("slope needs distinct epsilon values");
  return sxy / sxx;
}

ScalingResult memory_scaling(const MapSpec& map, const NoiseKernel& kernel, const std::vector<double>& eps_list,
                             const std::function<std::size_t(double)>& n_states_rule, double tol) {
  if (eps_list.size() < 4) throw InvalidArgument("memory_scaling needs at least 4 epsilon values");
  auto [lo, hi] = std::minmax_element(eps_list.begin(), eps_list.end());
  if (!(*lo > 0.0) || std::log2(*hi / *lo) < 3.0 - 1e-12)
    throw InvalidArgument("epsilon values must be positive and span at least 3 octaves");

  ScalingResult out;
  out.rows.resize(eps_list.size());
  parallel_for(eps_list.size(), [&](std::size_t i) {
    NoiseKernel k = kernel;
    k.epsilon = eps_list[i];
    std::size_t n = n_states_rule(k.epsilon);
    if (n < 2) throw InvalidArgument("resolution rule returned fewer than 2 states");
    CapacityResult c = memory_of_system(map, k, n, tol);
    out.rows[i] = {k.epsilon, n, c.capacity_bits, c.certified_slack, c.iterations};
  });
  out.slope = fit_log_slope(out.rows);
  return out;
}

}  // namespace ergokit
