#include "dvae/bo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dvae/core/rng.hpp"

namespace dvae::bo {

double GpHyper::signal() const { return std::exp(log_signal); }
double GpHyper::length() const { return std::exp(log_length); }
double GpHyper::noise() const { return std::exp(log_noise); }

GpHyper GpHyper::from(double signal, double length, double noise) {
  return {std::log(signal), std::log(length), std::log(noise)};
}

Standardizer Standardizer::fit(const Vector& y) {
  Standardizer s;
  const double n = static_cast<double>(y.size());
  if (y.size() == 0) return s;
  s.mean = y.mean();
  const double var = (y.array() - s.mean).square().sum() / n;
  s.std = var > 0.0 ? std::sqrt(var) : 1.0;
  return s;
}

Matrix se_kernel(const Matrix& a, const Matrix& b, double signal, double length) {
  const Vector an = a.rowwise().squaredNorm();
  const Vector bn = b.rowwise().squaredNorm();
  Matrix d2 = (-2.0 * a * b.transpose()).eval();
  d2.colwise() += an;
  d2.rowwise() += bn.transpose();
  const double inv = -0.5 / (length * length);
  return (signal * (d2.array().max(0.0) * inv).exp()).matrix();
}

double median_pairwise_distance(const Matrix& x) {
  std::vector<double> d;
  const auto n = x.rows();
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((x.row(i) - x.row(j)).norm());
  if (d.empty()) return 1.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid > 0.0 ? *mid : 1.0;
}

namespace {

// Lower Cholesky factor of k + noise I. The noise is doubled after each
// failure; gives up once it exceeds 1e-2 of the largest entry of k.
Matrix robust_cholesky(const Matrix& k, double& noise) {
  const double limit = 1e-2 * std::max(k.cwiseAbs().maxCoeff(), 1e-300);
  for (;;) {
    Matrix kn = k;
    kn.diagonal().array() += noise;
    Eigen::LLT<Matrix> llt(kn);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    if (noise > limit) throw CholeskyFailure("kernel matrix is not positive definite even with jitter");
    noise = noise > 0.0 ? 2.0 * noise : 1e-10;
  }
}

}  // namespace

double log_marginal_likelihood(const Matrix& x, const Vector& y, const GpHyper& hyper,
                               std::array<double, 3>* gradient) {
  const Matrix kse = se_kernel(x, x, hyper.signal(), hyper.length());
  double noise = hyper.noise();
  const Matrix l = robust_cholesky(kse, noise);
  const auto tri = l.triangularView<Eigen::Lower>();
  Vector alpha = tri.solve(y);
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha);
  const double n = static_cast<double>(y.size());
  const double lml = -0.5 * y.dot(alpha) - l.diagonal().array().log().sum() - 0.5 * n * std::log(2.0 * std::numbers::pi);
  if (gradient) {
    Matrix kinv = Matrix::Identity(x.rows(), x.rows());
    tri.solveInPlace(kinv);
    l.transpose().triangularView<Eigen::Upper>().solveInPlace(kinv);
    const Matrix w = alpha * alpha.transpose() - kinv;
    // dK/dlog s2 = Kse; dK/dlog l = Kse .* D2 / l^2; dK/dlog noise = noise I.
    const Vector xn = x.rowwise().squaredNorm();
    Matrix d2 = (-2.0 * x * x.transpose()).eval();
    d2.colwise() += xn;
    d2.rowwise() += xn.transpose();
    d2 = d2.array().max(0.0).matrix();
    const double l2 = hyper.length() * hyper.length();
    (*gradient)[0] = 0.5 * (w.array() * kse.array()).sum();
    (*gradient)[1] = 0.5 * (w.array() * kse.array() * d2.array()).sum() / l2;
    (*gradient)[2] = 0.5 * noise * w.trace();
  }
  return lml;
}

GpModel GpModel::with_hyper(const Matrix& x, const Vector& y, const GpHyper& hyper) {
  return with_hyper(x, y, hyper, Standardizer::fit(y));
}

GpModel GpModel::with_hyper(const Matrix& x, const Vector& y, const GpHyper& hyper, const Standardizer& s) {
  if (x.rows() != y.size()) throw std::invalid_argument("gp: inputs and targets differ in count");
  if (x.rows() < 1) throw std::invalid_argument("gp: no training points");
  if (!y.allFinite()) throw std::invalid_argument("gp: targets must be finite");
  GpModel m;
  m.x_ = x;
  m.standardizer_ = s;
  m.y_ = y.unaryExpr([&](double v) { return s.forward(v); });
  m.hyper_ = hyper;
  m.factorize();
  return m;
}

void GpModel::factorize() {
  noise_ = hyper_.noise();
  l_ = robust_cholesky(se_kernel(x_, x_, hyper_.signal(), hyper_.length()), noise_);
  const auto tri = l_.triangularView<Eigen::Lower>();
  alpha_ = tri.solve(y_);
  l_.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha_);
}

GpModel GpModel::fit(const Matrix& x, const Vector& y, const GpFitConfig& config) {
  if (x.rows() < 2) throw std::invalid_argument("gp: fitting needs at least two points");
  if (x.rows() != y.size()) throw std::invalid_argument("gp: inputs and targets differ in count");
  if (!y.allFinite()) throw std::invalid_argument("gp: targets must be finite");
  const Standardizer s = Standardizer::fit(y);
  const Vector ys = y.unaryExpr([&](double v) { return s.forward(v); });

  Matrix fx = x;
  Vector fy = ys;
  const auto n = static_cast<std::size_t>(x.rows());
  if (config.max_fit_points != 0 && n > config.max_fit_points) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(config.seed);
    shuffle(idx, rng);
    idx.resize(config.max_fit_points);
    std::sort(idx.begin(), idx.end());
    fx.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
    fy.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      fx.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
      fy(static_cast<Eigen::Index>(i)) = ys(static_cast<Eigen::Index>(idx[i]));
    }
  }

  GpHyper h = GpHyper::from(1.0, median_pairwise_distance(fx), config.initial_noise);
  std::array<double, 3> m{}, v{};
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (std::size_t t = 1; t <= config.steps; ++t) {
    std::array<double, 3> g{};
    log_marginal_likelihood(fx, fy, h, &g);
    double* params[3] = {&h.log_signal, &h.log_length, &h.log_noise};
    for (std::size_t k = 0; k < 3; ++k) {
      if (!std::isfinite(g[k])) g[k] = 0.0;
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double mh = m[k] / (1.0 - std::pow(b1, static_cast<double>(t)));
      const double vh = v[k] / (1.0 - std::pow(b2, static_cast<double>(t)));
      *params[k] += config.learning_rate * mh / (std::sqrt(vh) + eps);  // ascent
    }
    h.log_noise = std::max(h.log_noise, std::log(1e-6));
  }
  return with_hyper(x, y, h, s);
}

Prediction GpModel::predict_standardized(const Vector& x) const {
  const Matrix kx = se_kernel(x.transpose(), x_, hyper_.signal(), hyper_.length());
  const Vector k = kx.row(0).transpose();
  const Vector v = l_.triangularView<Eigen::Lower>().solve(k);
  return {k.dot(alpha_), std::max(0.0, hyper_.signal() - v.squaredNorm())};
}

Prediction GpModel::predict(const Vector& x) const {
  const Prediction p = predict_standardized(x);
  return {standardizer_.inverse(p.mean), p.var * standardizer_.std * standardizer_.std};
}

void GpModel::predict_many(const Matrix& xs, Vector& mean, Vector& var, Execution exec) const {
  mean.resize(xs.rows());
  var.resize(xs.rows());
  // Blocks of rows; each block is one triangular solve.
  constexpr Eigen::Index block = 64;
  const auto blocks = static_cast<std::size_t>((xs.rows() + block - 1) / block);
  for_each_index(blocks, exec, [&](std::size_t b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * block;
    const Eigen::Index rows = std::min(block, xs.rows() - begin);
    const Matrix k = se_kernel(x_, xs.middleRows(begin, rows), hyper_.signal(), hyper_.length());
    const Matrix v = l_.triangularView<Eigen::Lower>().solve(k);
    mean.segment(begin, rows) = k.transpose() * alpha_;
    var.segment(begin, rows) =
        (hyper_.signal() - v.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
  });
}

}  // namespace dvae::bo
