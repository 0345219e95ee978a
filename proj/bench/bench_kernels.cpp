// Serial reference path against the OpenMP path for the data-parallel kernels.
// Arg 0 is serial, 1 is parallel.
#include <benchmark/benchmark.h>

#include "dvae/bo/acquisition.hpp"
#include "dvae/bo/gp.hpp"
#include "dvae/core/rng.hpp"
#include "dvae/dag/generators.hpp"
#include "dvae/scoring/bayesnet.hpp"
#include "dvae/vae/loss.hpp"
#include "dvae/vae/metrics.hpp"

using namespace dvae;

namespace {

Execution exec_of(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

std::vector<dag::Dag> bn_model_dags(std::size_t n, std::uint64_t seed) {
  const auto vocab = dag::Vocab::bayes_net();
  Rng rng(seed);
  std::vector<dag::Dag> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(dag::to_model_space(dag::random_bn_dag(rng, vocab, 2.0 / 7.0), vocab));
  return out;
}

model::DVae& bn_model() {
  static model::DVae m(model::ModelConfig::defaults_for(dag::Domain::bayes_net, dag::Vocab::bayes_net()), 1);
  return m;
}

void BM_BatchGradient(benchmark::State& state) {
  const auto dags = bn_model_dags(32, 1);
  std::vector<std::uint64_t> seeds(dags.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = i + 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(vae::batch_loss_and_grad(bn_model(), dags, seeds, 1.0, exec_of(state)).loss);
}
BENCHMARK(BM_BatchGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PriorDecodes(benchmark::State& state) {
  const auto dags = bn_model_dags(64, 2);
  const auto moments = vae::embedding_moments(bn_model(), dags, Execution::serial);
  for (auto _ : state)
    benchmark::DoNotOptimize(vae::metric_prior_validity(bn_model(), moments, 3, exec_of(state), 50, 4).validity);
}
BENCHMARK(BM_PriorDecodes)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_KrigingBeliever(benchmark::State& state) {
  Rng rng(4);
  bo::Matrix x(300, 16);
  bo::Vector y(300);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) = rng.normal();
    y[i] = std::sin(x(i, 0)) + x(i, 1);
  }
  const auto gp = bo::GpModel::with_hyper(x, y, bo::GpHyper::from(1.0, 3.0, 1e-3));
  bo::CandidateConfig cfg;
  cfg.pool = 2000;
  const bo::Matrix c = bo::sample_candidates(x, y, cfg, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(bo::propose_batch_kb(gp, c, 10, bo::kDefaultXi, exec_of(state)).chosen);
}
BENCHMARK(BM_KrigingBeliever)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BicScoring(benchmark::State& state) {
  const auto vocab = dag::Vocab::bayes_net();
  const scoring::BicScorer scorer(scoring::standard_bn_data(), vocab);
  Rng rng(5);
  std::vector<dag::Dag> dags;
  for (int i = 0; i < 20000; ++i) dags.push_back(dag::random_bn_dag(rng, vocab, 2.0 / 7.0));
  std::vector<double> scores(dags.size());
  for (auto _ : state) {
    for_each_index(dags.size(), exec_of(state), [&](std::size_t i) { scores[i] = scorer.score(dags[i]); });
    benchmark::DoNotOptimize(scores.data());
  }
}
BENCHMARK(BM_BicScoring)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
