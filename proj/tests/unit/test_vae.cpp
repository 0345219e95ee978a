#include <cmath>
#include <filesystem>

#include <unistd.h>

#include "doctest.h"

#include "dvae/ad/grad_check.hpp"
#include "dvae/vae/loss.hpp"
#include "dvae/vae/metrics.hpp"
#include "dvae/vae/train.hpp"
#include "helpers.hpp"

using namespace dvae;
using dag::Dag;
using dag::Domain;

namespace {

std::vector<Dag> toy_set(Domain domain, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Dag> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(testing::random_model_dag(rng, domain));
  return out;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dvae_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

void check_same_parameters(const model::DVae& a, const model::DVae& b) {
  REQUIRE(a.store().size() == b.store().size());
  for (std::size_t s = 0; s < a.store().size(); ++s) CHECK(a.store()[s].value == b.store()[s].value);
}

}  // namespace

TEST_CASE("closed-form KL divergence") {
  CHECK(vae::kld_standard_normal(std::vector<double>{0.0}, std::vector<double>{0.0}) == 0.0);
  CHECK(vae::kld_standard_normal(std::vector<double>{1.0}, std::vector<double>{0.0}) == 0.5);
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> m(4), lv(4);
    for (auto& x : m) x = 2 * rng.normal();
    for (auto& x : lv) x = 3 * rng.normal();
    CHECK(vae::kld_standard_normal(m, lv) >= 0.0);
  }

  // Monte-Carlo estimate of E_q[log q(z) - log p(z)].
  const std::vector<double> m{0.4, -0.8}, lv{-0.5, 0.3};
  double mc = 0;
  const int draws = 200000;
  for (int k = 0; k < draws; ++k) {
    for (std::size_t d = 0; d < 2; ++d) {
      const double e = rng.normal();
      const double z = m[d] + std::exp(0.5 * lv[d]) * e;
      mc += -0.5 * lv[d] - 0.5 * e * e + 0.5 * z * z;
    }
  }
  CHECK(std::abs(mc / draws - vae::kld_standard_normal(m, lv)) < 2e-2);

  ad::Tape tape;
  const auto v = vae::kld_standard_normal(tape.constant(ad::Tensor::vector(m)), tape.constant(ad::Tensor::vector(lv)));
  CHECK(v.value().item() == doctest::Approx(vae::kld_standard_normal(m, lv)).epsilon(1e-14));
}

TEST_CASE("ELBO decomposition and the zero-noise mode") {
  const auto config = testing::toy_config(Domain::bayes_net, 5, 3);
  model::DVae model(config, 3);
  const auto dags = toy_set(Domain::bayes_net, 5, 1);
  for (const auto& d : dags) {
    ad::Tape tape(&model.store());
    Rng r0(9), r1(9);
    const auto plain = vae::elbo_loss(tape, model, d, r0, 0.0);
    const auto weighted = vae::elbo_loss(tape, model, d, r1, 0.3);
    CHECK(plain.loss.value().item() == plain.nll.value().item());
    CHECK(weighted.loss.value().item() - plain.loss.value().item() ==
          doctest::Approx(0.3 * weighted.kld.value().item()).epsilon(1e-12));

    Rng r2(1);
    const auto exact = vae::elbo_loss(tape, model, d, r2, 0.1, vae::Noise::zero);
    const auto q = model.posterior(d);
    CHECK(testing::as_vector(exact.z.value()) == q.mean);
  }
}

TEST_CASE("ELBO gradients match finite differences") {
  for (auto domain : {Domain::neural_arch, Domain::bayes_net}) {
    const auto config = testing::toy_config(domain, 3, 2);
    model::DVae model(config, 8);
    const Dag d = toy_set(domain, 1, 4)[0];
    const auto report = ad::grad_check(
        [&](ad::Tape& tape) {
          Rng rng(5);
          return vae::elbo_loss(tape, model, d, rng, 0.5).loss;
        },
        model.store(), 1e-5, 1e-3);
    INFO("max rel err ", report.max_relative_error);
    CHECK(report.passed);
  }
}

TEST_CASE("serial and parallel batch gradients are bit identical") {
  const auto config = testing::toy_config(Domain::neural_arch, 6, 3);
  model::DVae model(config, 2);
  const auto dags = toy_set(Domain::neural_arch, 17, 3);
  std::vector<std::uint64_t> seeds(dags.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = 100 + i;
  const auto a = vae::batch_loss_and_grad(model, dags, seeds, 0.005, Execution::serial);
  const auto b = vae::batch_loss_and_grad(model, dags, seeds, 0.005, Execution::parallel);
  CHECK(a.loss == b.loss);
  CHECK(a.per_dag_loss == b.per_dag_loss);
  for (std::size_t s = 0; s < a.grad.size(); ++s) CHECK(a.grad[s] == b.grad[s]);
}

TEST_CASE("training is deterministic and resumes exactly") {
  const auto config = testing::toy_config(Domain::bayes_net, 6, 3);
  const auto dags = toy_set(Domain::bayes_net, 40, 7);
  vae::TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 8;
  tc.patience = 1;  // exercise the decay path
  tc.seed = 11;

  model::DVae a(config, 5), b(config, 5);
  const auto ra = vae::train(a, dags, tc);
  vae::TrainOptions serial;
  serial.exec = Execution::serial;
  const auto rb = vae::train(b, dags, tc, serial);
  CHECK(ra.loss_history == rb.loss_history);
  check_same_parameters(a, b);
  for (double l : ra.loss_history) CHECK(std::isfinite(l));
  CHECK(ra.loss_history.size() == 4);

  const auto dir = temp_dir("resume");
  model::DVae c(config, 5);
  auto half = tc;
  half.epochs = 2;
  vae::TrainOptions first;
  first.checkpoint_path = dir / "ckpt.json";
  vae::train(c, dags, half, first);
  model::DVae d(config, 999);
  vae::TrainOptions second;
  second.resume_from = dir / "ckpt.json";
  const auto rd = vae::train(d, dags, tc, second);
  CHECK(rd.loss_history == ra.loss_history);
  CHECK(rd.state.learning_rate == ra.state.learning_rate);
  check_same_parameters(a, d);
  std::filesystem::remove_all(dir);

}

TEST_CASE("checkpoints refuse a different model configuration") {
  const auto config = testing::toy_config(Domain::bayes_net, 6, 3);
  const auto dags = toy_set(Domain::bayes_net, 10, 7);
  const auto dir = temp_dir("mismatch");
  model::DVae a(config, 5);
  vae::TrainConfig tc;
  tc.epochs = 1;
  vae::TrainOptions opts;
  opts.checkpoint_path = dir / "ckpt.json";
  vae::train(a, dags, tc, opts);
  auto other = config;
  other.hidden = 7;
  model::DVae b(other, 5);
  CHECK_THROWS(vae::load_checkpoint(opts.checkpoint_path, b));
  std::filesystem::remove_all(dir);
}

TEST_CASE("training reduces the loss on a small dataset") {
  auto config = testing::toy_config(Domain::bayes_net, 32, 16);
  config.max_nodes = 12;
  const auto dags = toy_set(Domain::bayes_net, 200, 42);
  model::DVae model(config, 1);
  vae::TrainConfig tc;
  tc.epochs = 100;
  tc.batch_size = 4;
  tc.learning_rate = 5e-3;
  const auto r = vae::train(model, dags, tc);
  INFO("first ", r.loss_history.front(), " last ", r.loss_history.back());
  CHECK(r.loss_history.back() < 0.1 * r.loss_history.front());
}

TEST_CASE("training rejects targets the decoder cannot produce") {
  const auto config = testing::toy_config(Domain::bayes_net, 4, 2);
  model::DVae model(config, 1);
  std::vector<Dag> bad{Dag(Domain::bayes_net)};
  CHECK_THROWS_AS(vae::train(model, bad, {}), std::invalid_argument);
}

TEST_CASE("identity keys ignore the topological labelling of bayes-net dags") {
  const auto vocab = dag::Vocab::bayes_net();
  const auto vars = vocab.operation_types();
  Dag a(Domain::bayes_net), b(Domain::bayes_net);
  // Same structure: A -> T and S independent, listed in two orders.
  a.add_node(vars[0]);
  a.add_node(vars[1]);
  a.add_node(vars[2]);
  a.add_edge(0, 2);
  b.add_node(vars[1]);
  b.add_node(vars[0]);
  b.add_node(vars[2]);
  b.add_edge(1, 2);
  CHECK(vae::identity_key(a, vocab) == vae::identity_key(b, vocab));
  b.add_edge(0, 2);
  CHECK(vae::identity_key(a, vocab) != vae::identity_key(b, vocab));
}

TEST_CASE("basic metrics") {
  const auto config = testing::toy_config(Domain::bayes_net, 6, 3);
  model::DVae model(config, 5);
  const auto train = toy_set(Domain::bayes_net, 30, 1);
  const auto test = toy_set(Domain::bayes_net, 5, 2);

  CHECK(vae::metric_reconstruction(model, test, 1, Execution::parallel) < 0.05);

  const auto moments = vae::embedding_moments(model, train, Execution::serial);
  const auto reject_all = [](const Dag&) { return false; };
  const auto none = vae::metric_prior_validity(model, moments, 3, Execution::parallel, 20, 2, reject_all);
  CHECK(none.validity == 0.0);
  CHECK(none.total == 40);
  CHECK(none.valid_decodes.empty());
  const auto un = vae::metric_unique_novel(none.valid_decodes, {}, config.vocab);
  CHECK_FALSE(un.uniqueness.has_value());
  CHECK_FALSE(un.novelty.has_value());

  const auto vocab = config.vocab;
  const Dag one = dag::to_domain_space(train[0], vocab);
  const std::vector<Dag> same(4, one);
  std::unordered_set<std::string> keys{vae::identity_key(one, vocab)};
  const auto dup = vae::metric_unique_novel(same, keys, vocab);
  CHECK(*dup.uniqueness == 0.25);
  CHECK(*dup.novelty == 0.0);
  CHECK(*vae::metric_unique_novel(same, {}, vocab).novelty == 1.0);

  const auto r1 = vae::basic_metrics(model, train, test, 9, Execution::parallel);
  const auto r2 = vae::basic_metrics(model, train, test, 9, Execution::serial);
  CHECK(r1.to_json().dump() == r2.to_json().dump());
  CHECK(r1.validity >= 0.0);
  CHECK(r1.validity <= 1.0);
}

TEST_CASE("rescaled prior moments") {
  vae::LatentMoments m{{1.0, -2.0}, {0.5, 3.0}};
  Rng rng(4);
  double s0 = 0, s1 = 0, q0 = 0, q1 = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto z = vae::sample_rescaled_prior(m, rng);
    s0 += z[0];
    s1 += z[1];
    q0 += z[0] * z[0];
    q1 += z[1] * z[1];
  }
  CHECK(s0 / n == doctest::Approx(1.0).epsilon(0.05));
  CHECK(s1 / n == doctest::Approx(-2.0).epsilon(0.05));
  CHECK(std::sqrt(q0 / n - (s0 / n) * (s0 / n)) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(std::sqrt(q1 / n - (s1 / n) * (s1 / n)) == doctest::Approx(3.0).epsilon(0.05));
}
