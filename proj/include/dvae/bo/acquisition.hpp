#pragma once

#include <cstddef>
#include <vector>

#include "dvae/bo/gp.hpp"
#include "dvae/core/parallel.hpp"

namespace dvae {
class Rng;
}

namespace dvae::bo {

inline constexpr double kDefaultXi = 0.01;

/// Maximization EI: (mu - best - xi) Phi(u) + sigma phi(u), u = (mu - best - xi) / sigma;
/// max(mu - best - xi, 0) when sigma = 0.
double expected_improvement(double mean, double sigma, double best, double xi = kDefaultXi);

struct CandidateConfig {
  std::size_t pool = 2000;
  /// Bounding box of the training inputs widened by this fraction per side.
  double expand = 0.1;
  /// Share of the pool drawn around the best points instead of the box.
  double local_fraction = 0.5;
  std::size_t top_k = 10;
  /// Perturbation std as a fraction of each input dimension's std.
  double local_scale = 0.1;
};

/// Rows are candidate inputs: uniform in the widened box, then Gaussian
/// perturbations of the `top_k` highest-scoring inputs.
Matrix sample_candidates(const Matrix& x, const Vector& y, const CandidateConfig& config, Rng& rng);

/// Posterior over a fixed candidate pool that can absorb believed labels.
/// Keeps V = L^-1 K(X, C); a believed point adds one row to V, and the
/// candidate variances drop by the square of that row. Means are unchanged
/// because a believed label equals the posterior mean.
class BelieverPool {
 public:
  BelieverPool(const GpModel& gp, const Matrix& candidates, Execution exec);

  double mean(std::size_t c) const { return mean_[static_cast<Eigen::Index>(c)]; }
  double var(std::size_t c) const { return std::max(0.0, var_[static_cast<Eigen::Index>(c)]); }
  std::size_t size() const { return static_cast<std::size_t>(candidates_.rows()); }
  /// Adds candidate c with label mean(c) to the conditioning set.
  void believe(std::size_t c);

 private:
  const GpModel& gp_;
  const Matrix& candidates_;
  Execution exec_;
  Matrix v_;                       // n x m
  std::vector<Vector> extra_rows_;  // one per believed point, length m
  Vector mean_;
  Vector var_;
};

struct Proposal {
  std::vector<std::size_t> chosen;  // candidate row indices, in selection order
  std::vector<double> ei;           // EI of each choice when it was made
};

/// Kriging Believer: repeatedly take the EI argmax (standardized units)
/// among unchosen candidates and believe it.
Proposal propose_batch_kb(const GpModel& gp, const Matrix& candidates, std::size_t batch, double xi, Execution exec);

}  // namespace dvae::bo
