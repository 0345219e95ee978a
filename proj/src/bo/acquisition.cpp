#include "dvae/bo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "dvae/core/rng.hpp"

namespace dvae::bo {

double expected_improvement(double mean, double sigma, double best, double xi) {
  const double gap = mean - best - xi;
  if (!(sigma > 0.0)) return std::max(gap, 0.0);
  const double u = gap / sigma;
  const double cdf = 0.5 * std::erfc(-u / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, gap * cdf + sigma * pdf);
}

Matrix sample_candidates(const Matrix& x, const Vector& y, const CandidateConfig& config, Rng& rng) {
  if (x.rows() == 0) throw std::invalid_argument("candidates need training inputs");
  const Eigen::Index d = x.cols();
  const Vector lo = x.colwise().minCoeff().transpose();
  const Vector hi = x.colwise().maxCoeff().transpose();
  const Vector pad = config.expand * (hi - lo);
  const Vector mu = x.colwise().mean().transpose();
  const Vector sd = ((x.rowwise() - mu.transpose()).array().square().colwise().mean()).sqrt().transpose();

  const auto local = static_cast<Eigen::Index>(std::llround(config.local_fraction * static_cast<double>(config.pool)));
  const auto total = static_cast<Eigen::Index>(config.pool);
  Matrix c(total, d);
  for (Eigen::Index i = 0; i < total - local; ++i)
    for (Eigen::Index k = 0; k < d; ++k) c(i, k) = rng.uniform(lo[k] - pad[k], hi[k] + pad[k]);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(y.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  // Ties broken by index so the pool does not depend on sort stability.
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return y[a] != y[b] ? y[a] > y[b] : a < b; });
  const std::size_t top = std::max<std::size_t>(1, std::min(config.top_k, order.size()));
  for (Eigen::Index i = total - local; i < total; ++i) {
    const Eigen::Index base = order[rng.index(top)];
    for (Eigen::Index k = 0; k < d; ++k) c(i, k) = x(base, k) + config.local_scale * sd[k] * rng.normal();
  }
  return c;
}

BelieverPool::BelieverPool(const GpModel& gp, const Matrix& candidates, Execution exec)
    : gp_(gp), candidates_(candidates), exec_(exec) {
  const Matrix& x = gp.inputs();
  const auto m = candidates.rows();
  v_.resize(x.rows(), m);
  mean_.resize(m);
  var_.resize(m);
  constexpr Eigen::Index block = 64;
  const auto blocks = static_cast<std::size_t>((m + block - 1) / block);
  const double s2 = gp.hyper().signal(), len = gp.hyper().length();
  for_each_index(blocks, exec, [&](std::size_t b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * block;
    const Eigen::Index cols = std::min(block, m - begin);
    const Matrix k = se_kernel(x, candidates.middleRows(begin, cols), s2, len);
    v_.middleCols(begin, cols) = gp.cholesky().triangularView<Eigen::Lower>().solve(k);
    mean_.segment(begin, cols) = k.transpose() * gp.alpha();
    var_.segment(begin, cols) = (s2 - v_.middleCols(begin, cols).colwise().squaredNorm().array()).matrix().transpose();
  });
}

void BelieverPool::believe(std::size_t c) {
  const auto ci = static_cast<Eigen::Index>(c);
  const double s2 = gp_.hyper().signal(), len = gp_.hyper().length();
  // New Cholesky row is [V[:, c]; extra[:, c]] with diagonal d.
  const double d2 = var_[ci] + gp_.effective_noise();
  if (!(d2 > 0.0)) throw CholeskyFailure("believed point makes the kernel matrix singular");
  const double d = std::sqrt(d2);
  const auto m = candidates_.rows();
  Vector row(m);
  constexpr Eigen::Index block = 256;
  const auto blocks = static_cast<std::size_t>((m + block - 1) / block);
  const Vector lc = v_.col(ci);
  std::vector<double> le(extra_rows_.size());
  for (std::size_t r = 0; r < extra_rows_.size(); ++r) le[r] = extra_rows_[r][ci];
  for_each_index(blocks, exec_, [&](std::size_t b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * block;
    const Eigen::Index cols = std::min(block, m - begin);
    const Matrix k = se_kernel(candidates_.row(ci), candidates_.middleRows(begin, cols), s2, len);
    Vector seg = k.row(0).transpose() - v_.middleCols(begin, cols).transpose() * lc;
    for (std::size_t r = 0; r < extra_rows_.size(); ++r) seg -= le[r] * extra_rows_[r].segment(begin, cols);
    row.segment(begin, cols) = seg / d;
  });
  var_ -= row.cwiseAbs2();
  extra_rows_.push_back(std::move(row));
}

Proposal propose_batch_kb(const GpModel& gp, const Matrix& candidates, std::size_t batch, double xi, Execution exec) {
  if (batch > static_cast<std::size_t>(candidates.rows())) throw std::invalid_argument("batch exceeds candidate pool");
  BelieverPool pool(gp, candidates, exec);
  double best = gp.targets().maxCoeff();
  std::vector<char> taken(pool.size(), 0);
  Proposal p;
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t arg = pool.size();
    double top = -1.0;
    for (std::size_t c = 0; c < pool.size(); ++c) {
      if (taken[c]) continue;
      const double ei = expected_improvement(pool.mean(c), std::sqrt(pool.var(c)), best, xi);
      if (ei > top) {
        top = ei;
        arg = c;
      }
    }
    taken[arg] = 1;
    p.chosen.push_back(arg);
    p.ei.push_back(top);
    best = std::max(best, pool.mean(arg));
    if (b + 1 < batch) pool.believe(arg);
  }
  return p;
}

}  // namespace dvae::bo
