#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

#include "dvae/core/parallel.hpp"

namespace dvae::bo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Squared-exponential kernel s2 * exp(-|a - b|^2 / (2 l^2)) plus noise on
/// the diagonal, parameterized in log space.
struct GpHyper {
  double log_signal = 0.0;  // log s2
  double log_length = 0.0;  // log l
  double log_noise = 0.0;   // log noise variance

  double signal() const;
  double length() const;
  double noise() const;
  static GpHyper from(double signal, double length, double noise);
};

struct GpFitConfig {
  std::size_t steps = 50;
  double learning_rate = 0.05;
  double initial_noise = 1e-2;
  /// Hyperparameters are fit on at most this many points (0: all); the final
  /// posterior always uses every point.
  std::size_t max_fit_points = 500;
  std::uint64_t seed = 0;
};

class CholeskyFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Targets are standardized by their own mean and std.
struct Standardizer {
  double mean = 0.0;
  double std = 1.0;

  static Standardizer fit(const Vector& y);
  double forward(double v) const { return (v - mean) / std; }
  double inverse(double v) const { return v * std + mean; }
};

Matrix se_kernel(const Matrix& a, const Matrix& b, double signal, double length);
/// Median of pairwise Euclidean distances between rows (1 if degenerate).
double median_pairwise_distance(const Matrix& x);

/// Log marginal likelihood of standardized targets and its gradient with
/// respect to (log_signal, log_length, log_noise).
double log_marginal_likelihood(const Matrix& x, const Vector& y, const GpHyper& hyper,
                               std::array<double, 3>* gradient = nullptr);

struct Prediction {
  double mean = 0.0;
  double var = 0.0;
};

/// Exact GP posterior. Rows of `x` are inputs.
class GpModel {
 public:
  /// Standardizes y, fits hyperparameters by Adam on the log marginal
  /// likelihood from s2 = 1, l = median distance, noise = initial_noise.
  static GpModel fit(const Matrix& x, const Vector& y, const GpFitConfig& config = {});
  /// Posterior with fixed hyperparameters; y is standardized unless a
  /// standardizer is given.
  static GpModel with_hyper(const Matrix& x, const Vector& y, const GpHyper& hyper);
  static GpModel with_hyper(const Matrix& x, const Vector& y, const GpHyper& hyper, const Standardizer& s);

  /// Standardized units; variance clamped at 0.
  Prediction predict_standardized(const Vector& x) const;
  /// Raw units.
  Prediction predict(const Vector& x) const;
  void predict_many(const Matrix& xs, Vector& mean, Vector& var, Execution exec) const;

  std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }
  const Matrix& inputs() const { return x_; }
  const Vector& targets() const { return y_; }
  const GpHyper& hyper() const { return hyper_; }
  const Standardizer& standardizer() const { return standardizer_; }
  /// Noise actually used after any jitter doubling.
  double effective_noise() const { return noise_; }
  const Matrix& cholesky() const { return l_; }
  const Vector& alpha() const { return alpha_; }

 private:
  void factorize();

  Matrix x_;
  Vector y_;
  GpHyper hyper_;
  Standardizer standardizer_;
  double noise_ = 0.0;
  Matrix l_;
  Vector alpha_;
};

}  // namespace dvae::bo
