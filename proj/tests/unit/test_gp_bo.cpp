#include <cmath>
#include <numbers>

#include "doctest.h"

#include "dvae/bo/acquisition.hpp"
#include "dvae/bo/gp.hpp"
#include "dvae/bo/search.hpp"
#include "dvae/dag/io.hpp"
#include "helpers.hpp"

using namespace dvae;
using namespace dvae::bo;

namespace {

Matrix random_inputs(Rng& rng, Eigen::Index n, Eigen::Index d, double scale = 1.0) {
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = scale * rng.normal();
  return x;
}

Vector smooth_targets(const Matrix& x) {
  Vector y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = std::sin(x(i, 0)) + 0.5 * x.row(i).squaredNorm();
  return y;
}

// Posterior from an explicit dense system, without reusing any factorization.
Prediction dense_oracle(const Matrix& x, const Vector& ys, const GpHyper& h, const Vector& at) {
  const Eigen::Index n = x.rows();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      k(i, j) = h.signal() * std::exp(-(x.row(i) - x.row(j)).squaredNorm() / (2 * h.length() * h.length()));
  k.diagonal().array() += h.noise();
  Vector ks(n);
  for (Eigen::Index i = 0; i < n; ++i)
    ks[i] = h.signal() * std::exp(-(x.row(i).transpose() - at).squaredNorm() / (2 * h.length() * h.length()));
  const Eigen::FullPivLU<Matrix> lu(k);
  return {ks.dot(lu.solve(ys)), h.signal() - ks.dot(lu.solve(ks))};
}

double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

}  // namespace

TEST_CASE("GP interpolation and prior reversion") {
  Matrix x(1, 2);
  x << 0.3, -0.2;
  Vector y(1);
  y << 4.0;
  const auto gp = GpModel::with_hyper(x, y, GpHyper::from(1.0, 0.7, 1e-10));
  const auto at = gp.predict(x.row(0).transpose());
  CHECK(at.mean == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(at.var < 1e-8);
  const auto far = gp.predict_standardized(Vector::Constant(2, 100.0));
  CHECK(std::abs(far.mean) < 1e-12);
  CHECK(far.var == doctest::Approx(1.0));

  Matrix two(2, 1);
  two << -1.0, 1.0;
  Vector opposite(2);
  opposite << -2.0, 2.0;
  const auto sym = GpModel::with_hyper(two, opposite, GpHyper::from(1.3, 0.8, 1e-4));
  CHECK(std::abs(sym.predict(Vector::Zero(1)).mean) < 1e-12);
}

TEST_CASE("GP posterior matches a dense solve") {
  Rng rng(3);
  const Matrix x = random_inputs(rng, 40, 3);
  const Vector y = smooth_targets(x);
  const GpHyper h = GpHyper::from(1.4, 0.9, 1e-3);
  const auto gp = GpModel::with_hyper(x, y, h);
  CHECK(gp.effective_noise() == doctest::Approx(1e-3));
  Vector ys = y;
  for (auto& v : ys) v = gp.standardizer().forward(v);
  for (int i = 0; i < 20; ++i) {
    const Vector at = random_inputs(rng, 1, 3).row(0).transpose();
    const auto want = dense_oracle(x, ys, h, at);
    const auto got = gp.predict_standardized(at);
    CHECK(std::abs(got.mean - want.mean) < 1e-8);
    CHECK(std::abs(got.var - want.var) < 1e-8);
    CHECK(gp.predict(at).mean == doctest::Approx(gp.standardizer().inverse(got.mean)).epsilon(1e-14));
  }
  Vector mean, var;
  const Matrix many = random_inputs(rng, 300, 3);
  gp.predict_many(many, mean, var, Execution::parallel);
  for (Eigen::Index i = 0; i < many.rows(); i += 37) {
    const auto p = gp.predict_standardized(many.row(i).transpose());
    CHECK(std::abs(mean[i] - p.mean) < 1e-12);
    CHECK(std::abs(var[i] - p.var) < 1e-12);
  }
}

TEST_CASE("log marginal likelihood value and gradient") {
  Rng rng(5);
  const Matrix x = random_inputs(rng, 25, 2);
  Vector y = smooth_targets(x);
  y = (y.array() - y.mean()) / std::sqrt((y.array() - y.mean()).square().mean());
  for (int rep = 0; rep < 10; ++rep) {
    const GpHyper h{0.5 * rng.normal(), 0.3 * rng.normal(), -3.0 + rng.normal()};
    std::array<double, 3> grad{};
    const double value = log_marginal_likelihood(x, y, h, &grad);

    Matrix k = se_kernel(x, x, h.signal(), h.length());
    k.diagonal().array() += h.noise();
    const Eigen::FullPivLU<Matrix> lu(k);
    const double direct = -0.5 * y.dot(lu.solve(y)) - 0.5 * std::log(lu.determinant()) -
                          0.5 * static_cast<double>(y.size()) * std::log(2 * std::numbers::pi);
    CHECK(value == doctest::Approx(direct).epsilon(1e-9));

    const double step = 1e-5;
    for (int p = 0; p < 3; ++p) {
      GpHyper up = h, down = h;
      double* u = p == 0 ? &up.log_signal : p == 1 ? &up.log_length : &up.log_noise;
      double* d = p == 0 ? &down.log_signal : p == 1 ? &down.log_length : &down.log_noise;
      *u += step;
      *d -= step;
      const double fd = (log_marginal_likelihood(x, y, up) - log_marginal_likelihood(x, y, down)) / (2 * step);
      CHECK(std::abs(fd - grad[p]) / std::max({std::abs(fd), std::abs(grad[p]), 1e-4}) < 1e-4);
    }
  }
}

TEST_CASE("GP fit") {
  Rng rng(6);
  const Matrix x = random_inputs(rng, 80, 2);
  const Vector y = smooth_targets(x);
  const auto gp = GpModel::fit(x, y);
  CHECK(std::isfinite(gp.hyper().signal()));
  CHECK(gp.effective_noise() >= 1e-6);
  CHECK(gp.size() == 80);
  // The fitted model beats the initial hyperparameters.
  Vector ys = y;
  for (auto& v : ys) v = gp.standardizer().forward(v);
  const GpHyper initial = GpHyper::from(1.0, median_pairwise_distance(x), 1e-2);
  CHECK(log_marginal_likelihood(x, ys, gp.hyper()) > log_marginal_likelihood(x, ys, initial));
  for (Eigen::Index i = 0; i < 80; i += 7)
    CHECK(std::abs(gp.standardizer().inverse(gp.standardizer().forward(y[i])) - y[i]) < 1e-10);
  CHECK_THROWS(GpModel::fit(x.topRows(1), y.head(1)));
  Vector bad = y;
  bad[0] = std::nan("");
  CHECK_THROWS(GpModel::fit(x, bad));

  // Duplicate inputs with zero noise still factorize thanks to jitter.
  Matrix dup(3, 1);
  dup << 0.5, 0.5, 0.5;
  const auto jittered = GpModel::with_hyper(dup, Vector::LinSpaced(3, 0, 1), GpHyper::from(1.0, 1.0, 1e-14));
  CHECK(jittered.effective_noise() >= 0.999e-14);
  CHECK(std::isfinite(jittered.predict(Vector::Constant(1, 0.5)).mean));
  CHECK(jittered.predict(Vector::Constant(1, 0.5)).mean == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("expected improvement") {
  CHECK(expected_improvement(0.5, 0.0, 1.0, 0.01) == 0.0);
  CHECK(expected_improvement(1.0 + 0.01 + 0.25, 0.0, 1.0, 0.01) == doctest::Approx(0.25));
  Rng rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    const double mu = rng.normal(), sigma = 0.1 + rng.uniform(), best = rng.normal();
    double mc = 0;
    const int draws = 1000000;
    for (int k = 0; k < draws; ++k) mc += std::max(mu + sigma * rng.normal() - best - kDefaultXi, 0.0);
    CHECK(std::abs(mc / draws - expected_improvement(mu, sigma, best)) < 1e-3 * (1 + sigma));
  }
  for (double mu = -2; mu <= 0.0; mu += 0.25) {
    double prev = 0.0;
    for (double s = 0.0; s <= 3.0; s += 0.1) {
      const double ei = expected_improvement(mu, s, 0.0);
      CHECK(ei >= 0.0);
      CHECK(ei >= prev - 1e-15);
      prev = ei;
    }
  }
  CHECK(normal_cdf(0.0) == 0.5);
}

TEST_CASE("candidate pool") {
  Rng rng(2);
  const Matrix x = random_inputs(rng, 30, 3);
  const Vector y = smooth_targets(x);
  CandidateConfig cfg;
  cfg.pool = 400;
  const Matrix c = sample_candidates(x, y, cfg, rng);
  CHECK(c.rows() == 400);
  const Vector lo = x.colwise().minCoeff(), hi = x.colwise().maxCoeff();
  for (Eigen::Index i = 0; i < 200; ++i)
    for (Eigen::Index k = 0; k < 3; ++k) {
      CHECK(c(i, k) >= lo[k] - 0.1 * (hi[k] - lo[k]));
      CHECK(c(i, k) <= hi[k] + 0.1 * (hi[k] - lo[k]));
    }
}

TEST_CASE("Kriging Believer") {
  Rng rng(12);
  const Matrix x = random_inputs(rng, 30, 2);
  const Vector y = smooth_targets(x);
  const auto gp = GpModel::with_hyper(x, y, GpHyper::from(1.0, 0.8, 1e-4));
  CandidateConfig cfg;
  cfg.pool = 300;
  const Matrix c = sample_candidates(x, y, cfg, rng);

  // Batch of one is the EI argmax.
  const auto one = propose_batch_kb(gp, c, 1, kDefaultXi, Execution::serial);
  const double best = gp.targets().maxCoeff();
  double top = -1;
  std::size_t arg = 0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const auto p = gp.predict_standardized(c.row(i).transpose());
    const double ei = expected_improvement(p.mean, std::sqrt(p.var), best);
    if (ei > top) {
      top = ei;
      arg = static_cast<std::size_t>(i);
    }
  }
  CHECK(one.chosen == std::vector<std::size_t>{arg});

  const auto batch = propose_batch_kb(gp, c, 25, kDefaultXi, Execution::parallel);
  CHECK(batch.chosen.size() == 25);
  std::vector<std::size_t> sorted = batch.chosen;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(propose_batch_kb(gp, c, 25, kDefaultXi, Execution::serial).chosen == batch.chosen);

  // Incremental believing equals refitting with the believed labels.
  BelieverPool pool(gp, c, Execution::serial);
  Matrix grown = x;
  Vector labels = y;
  for (std::size_t k = 0; k < 5; ++k) {
    const std::size_t pick = batch.chosen[k];
    const double mean = pool.mean(pick);
    pool.believe(pick);
    CHECK(pool.var(pick) < 1e-3);
    if (mean <= best) CHECK(expected_improvement(pool.mean(pick), std::sqrt(pool.var(pick)), best) < 1e-3);
    grown.conservativeResize(grown.rows() + 1, Eigen::NoChange);
    grown.row(grown.rows() - 1) = c.row(static_cast<Eigen::Index>(pick));
    labels.conservativeResize(labels.size() + 1);
    labels[labels.size() - 1] = gp.standardizer().inverse(mean);
  }
  const auto refit = GpModel::with_hyper(grown, labels, gp.hyper(), gp.standardizer());
  for (Eigen::Index i = 0; i < c.rows(); i += 11) {
    const auto p = refit.predict_standardized(c.row(i).transpose());
    CHECK(std::abs(pool.mean(static_cast<std::size_t>(i)) - p.mean) < 1e-8);
    CHECK(std::abs(pool.var(static_cast<std::size_t>(i)) - p.var) < 1e-8);
  }
  CHECK_THROWS(propose_batch_kb(gp, c, 301, kDefaultXi, Execution::serial));
}

TEST_CASE("Pearson and predictive evaluation") {
  Vector a(4), b(4);
  a << 1, 2, 3, 4;
  b << 2, 4, 6, 8;
  CHECK(*pearson(a, b) == doctest::Approx(1.0));
  CHECK_FALSE(pearson(a, Vector::Constant(4, 3.0)).has_value());

  Rng rng(4);
  const Matrix x = random_inputs(rng, 60, 2), tx = random_inputs(rng, 20, 2);
  GpFitConfig cfg;
  cfg.steps = 10;
  const auto r = predictive_eval(x, smooth_targets(x), tx, smooth_targets(tx), 3, 7, cfg, Execution::parallel);
  CHECK(r.rmse.size() == 3);
  CHECK(r.rmse_std() == 0.0);  // every point is used, so the fits coincide
  CHECK(*r.pearson_mean() > 0.8);
  const auto j = r.to_json();
  CHECK(j.contains("rmse_mean"));
  CHECK(j.contains("pearson_std"));
}

TEST_CASE("search loops with a constant oracle") {
  const auto config = testing::toy_config(dag::Domain::bayes_net, 6, 3);
  model::DVae model(config, 3);
  Rng rng(1);
  std::vector<dag::Dag> dags;
  for (int i = 0; i < 30; ++i) dags.push_back(testing::random_model_dag(rng, dag::Domain::bayes_net));
  const Matrix x = to_matrix(vae::embed_means(model, dags, Execution::serial));
  Vector y(x.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = rng.normal();
  const Oracle constant = [](const dag::Dag&) { return std::optional<double>(2.5); };
  BoConfig bc;
  bc.iterations = 3;
  bc.batch = 4;
  bc.candidates.pool = 100;
  bc.gp.steps = 5;
  const auto bo = bo_loop(model, x, y, constant, bc, Execution::parallel);
  CHECK(bo.entries.size() == 12);
  CHECK(*bo.best() == 2.5);
  const auto rs = random_search(model, vae::embedding_moments(model, dags, Execution::serial), constant, bc,
                                Execution::parallel);
  CHECK(rs.entries.size() == 12);
  CHECK(*rs.best() == *bo.best());
  const auto rounds = summarize(bo);
  CHECK(rounds.size() == 3);
  CHECK(*rounds.back().best_so_far == 2.5);

  const auto again = bo_loop(model, x, y, constant, bc, Execution::serial);
  CHECK(history_jsonl(again, config.vocab) == history_jsonl(bo, config.vocab));
  std::istringstream lines(history_jsonl(bo, config.vocab));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("valid"));
    // Untrained decoders may emit START -> END, which is empty in domain space.
    CHECK(dag::from_json(j.at("dag"), config.vocab).node_count() <= config.max_nodes);
    ++count;
  }
  CHECK(count == 12);
}
