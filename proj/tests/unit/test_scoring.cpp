#include <cmath>
#include <filesystem>
#include <map>

#include <unistd.h>

#include "doctest.h"

#include "dvae/core/rng.hpp"
#include "dvae/dag/algorithms.hpp"
#include "dvae/dag/generators.hpp"
#include "dvae/dag/validity.hpp"
#include "dvae/scoring/bayesnet.hpp"
#include "dvae/scoring/computation.hpp"

using namespace dvae;
using namespace dvae::scoring;
using dag::Dag;
using dag::Domain;
using dag::Vocab;

namespace {

Dag build(Domain domain, std::vector<std::size_t> types, std::vector<dag::Edge> edges) {
  Dag d(domain);
  for (auto t : types) d.add_node(t);
  for (auto [u, v] : edges) d.add_edge(u, v);
  return d;
}

BnDataset random_dataset(Rng& rng, std::size_t vars, std::size_t rows) {
  BnDataset d;
  for (std::size_t v = 0; v < vars; ++v) d.names.push_back(std::string(1, static_cast<char>('P' + v)));
  d.rows = rows;
  d.values.resize(rows * vars);
  // Correlated columns so parent sets matter.
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t v = 0; v < vars; ++v) {
      const double p = v == 0 ? 0.4 : (d.values[r * vars + v - 1] ? 0.8 : 0.25);
      d.values[r * vars + v] = rng.bernoulli(p) ? 1 : 0;
    }
  }
  return d;
}

// Independent counting: a map from (parent values, child value) to count.
double brute_force_ll(const BnDataset& data, std::size_t child, const std::vector<std::size_t>& parents) {
  std::map<std::vector<int>, std::map<int, double>> counts;
  for (std::size_t r = 0; r < data.rows; ++r) {
    std::vector<int> key;
    for (auto p : parents) key.push_back(data.at(r, p));
    counts[key][data.at(r, child)] += 1.0;
  }
  double ll = 0.0;
  for (const auto& [key, by_value] : counts) {
    double total = 0.0;
    for (const auto& kv : by_value) total += kv.second;
    for (const auto& kv : by_value) ll += kv.second * std::log(kv.second / total);
  }
  return ll;
}

// All dags over three labelled nodes, as parent lists.
std::vector<std::vector<std::vector<std::size_t>>> all_three_node_dags() {
  std::vector<std::vector<std::vector<std::size_t>>> out;
  const std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 1}, {0, 2}, {1, 2}};
  // Each unordered pair: absent, forward or backward.
  for (int code = 0; code < 27; ++code) {
    Dag d(Domain::generic);
    for (int i = 0; i < 3; ++i) d.add_node(0);
    int c = code;
    for (auto [a, b] : pairs) {
      const int dir = c % 3;
      c /= 3;
      if (dir == 1) d.add_edge(a, b);
      if (dir == 2) d.add_edge(b, a);
    }
    if (!dag::is_acyclic(d)) continue;
    std::vector<std::vector<std::size_t>> parents(3);
    for (std::size_t v = 0; v < 3; ++v) parents[v] = d.predecessors(v);
    out.push_back(parents);
  }
  return out;
}

}  // namespace

TEST_CASE("computation semantics") {
  const Vocab vocab = Vocab::neural_arch();
  const OpSemantics identity(vocab, 3);
  const Dag chain = build(Domain::neural_arch, {vocab.start(), 1, 2, vocab.end()}, {{0, 1}, {1, 2}, {2, 3}});
  const std::vector<double> x{0.5, -1.0, 2.0};
  CHECK(eval_computation(chain, identity, x) == x);

  // Diamond in -> a, in -> b, (a, b) -> out with hand-picked 2-d affine maps.
  OpSemantics s(vocab, 2);
  s.set(1, {{2, 0, 0, 1}, {1, 0}, Nonlinearity::identity});
  s.set(2, {{0, 1, 1, 0}, {0, -1}, Nonlinearity::identity});
  const Dag diamond =
      build(Domain::neural_arch, {vocab.start(), 1, 2, vocab.end()}, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  const auto y = eval_computation(diamond, s, std::vector<double>{3, 5});
  // a = (7, 5), b = (5, 2), mean = (6, 3.5).
  CHECK(y == std::vector<double>{6.0, 3.5});

  CHECK_THROWS(eval_computation(build(Domain::neural_arch, {vocab.start(), 1, 2}, {{0, 1}, {0, 2}}), s,
                                std::vector<double>{1, 1}));
  CHECK_THROWS(eval_computation(build(Domain::neural_arch, {vocab.start(), 42}, {{0, 1}}), s,
                                std::vector<double>{1, 1}));
}

TEST_CASE("proxy score") {
  const auto& oracle = ProxyOracle::standard();
  const Vocab vocab = Vocab::neural_arch();
  CHECK(oracle.computation_score(oracle.target()) == 1.0);
  CHECK(nn_proxy_score(oracle.target()) == 1.0);

  const Dag invalid = build(Domain::neural_arch, {vocab.start(), 1, 2, vocab.end()}, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  CHECK(nn_proxy_score(invalid) == 0.0);

  Rng rng(3);
  int multi = 0;
  for (int i = 0; i < 100; ++i) {
    const Dag d = dag::random_nn_dag(rng, 2 + rng.index(5), vocab, 0.5);
    const Dag ex = dag::unshare_expand(d);
    if (ex.node_count() > d.node_count()) ++multi;
    const double a = oracle.computation_score(d);
    CHECK(a > 0.0);
    CHECK(a <= 1.0);
    CHECK(std::abs(a - oracle.computation_score(ex)) < 1e-12);
    CHECK(nn_proxy_score(d) == a);
    CHECK(nn_proxy_score(d) == nn_proxy_score(d));
    const std::vector<double> x{0.1, 0.2, -0.3, 0.4};
    const auto ya = eval_computation(d, oracle.semantics(), x), yb = eval_computation(ex, oracle.semantics(), x);
    for (std::size_t k = 0; k < ya.size(); ++k) CHECK(std::abs(ya[k] - yb[k]) < 1e-12);
  }
  CHECK(multi > 50);
}

TEST_CASE("ancestral sampling") {
  GroundTruthBn forced;
  forced.names = {"a", "b", "c"};
  forced.cpts = {{{}, {1.0}}, {{0}, {1.0, 0.0}}, {{0, 1}, {0.0, 1.0, 0.0, 0.0}}};
  const auto d = sample_bn_data(forced, 50, 1);
  for (std::size_t r = 0; r < d.rows; ++r) {
    CHECK(d.at(r, 0) == 1);
    CHECK(d.at(r, 1) == 0);
    CHECK(d.at(r, 2) == 0);  // row index 0b10 = 2
  }

  const auto gt = GroundTruthBn::asia();
  const auto big = sample_bn_data(gt, 100000, 77);
  CHECK(big == sample_bn_data(gt, 100000, 77));
  double a = 0;
  for (std::size_t r = 0; r < big.rows; ++r) a += big.at(r, 0);
  CHECK(std::abs(a / big.rows - gt.cpts[0].p_one[0]) < 0.01);

  // D given (E, B): first parent is the most significant bit.
  const std::size_t child = 7;
  std::vector<double> ones(4, 0), totals(4, 0);
  for (std::size_t r = 0; r < big.rows; ++r) {
    const std::size_t config = 2 * big.at(r, gt.cpts[child].parents[0]) + big.at(r, gt.cpts[child].parents[1]);
    totals[config] += 1;
    ones[config] += big.at(r, child);
  }
  for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(ones[c] / totals[c] - gt.cpts[child].p_one[c]) < 0.02);

  GroundTruthBn broken = gt;
  broken.cpts[2].parents = {5};
  CHECK_THROWS(broken.validate());
}

TEST_CASE("local BIC closed forms") {
  BnDataset d;
  d.names = {"x"};
  d.rows = 100;
  for (int i = 0; i < 100; ++i) d.values.push_back(i < 60 ? 1 : 0);
  const double want = 60 * std::log(0.6) + 40 * std::log(0.4) - 0.5 * std::log(100.0);
  CHECK(bic_local(d, 0, {}) == doctest::Approx(want).epsilon(1e-14));
  CHECK(bic_local(d, 0, {}) == doctest::Approx(-69.60).epsilon(1e-4));

  BnDataset copy;
  copy.names = {"p", "c"};
  Rng rng(2);
  copy.rows = 300;
  for (std::size_t r = 0; r < copy.rows; ++r) {
    const std::uint8_t v = rng.bernoulli(0.3);
    copy.values.push_back(v);
    copy.values.push_back(v);
  }
  const std::vector<std::size_t> parent{0};
  CHECK(bic_local(copy, 1, parent) == doctest::Approx(-0.5 * std::log(300.0) * 2).epsilon(1e-14));
}

TEST_CASE("BIC matches brute-force counting on every three-node structure") {
  const auto dags = all_three_node_dags();
  CHECK(dags.size() == 25);
  Rng rng(8);
  for (int rep = 0; rep < 3; ++rep) {
    const BnDataset data = random_dataset(rng, 3, 200);
    const Vocab vocab = Vocab::bayes_net(data.names);
    const BicScorer scorer(data, vocab);
    for (const auto& parents : dags) {
      Dag d(Domain::bayes_net);
      for (std::size_t v = 0; v < 3; ++v) d.add_node(vocab.operation_types()[v]);
      double want = 0;
      for (std::size_t v = 0; v < 3; ++v) {
        for (auto p : parents[v]) d.add_edge(p, v);
        want += brute_force_ll(data, v, parents[v]) -
                0.5 * std::log(200.0) * static_cast<double>(std::size_t{1} << parents[v].size());
      }
      CHECK(std::abs(bic_score(d, data, vocab) - want) < 1e-12);
      CHECK(scorer.score(d) == bic_score(d, data, vocab));
    }
  }
}

TEST_CASE("BIC structure properties") {
  const Vocab vocab = Vocab::bayes_net();
  const auto& data = standard_bn_data();
  CHECK(data.rows == kBnDataRows);
  const BicScorer scorer(data, vocab);
  Rng rng(10);

  Dag empty(Domain::bayes_net);
  for (auto t : vocab.operation_types()) empty.add_node(t);
  double marginals = 0;
  for (std::size_t v = 0; v < 8; ++v) marginals += bic_local(data, v, {});
  CHECK(scorer.score(empty) == doctest::Approx(marginals).epsilon(1e-14));

  for (int i = 0; i < 50; ++i) {
    std::vector<std::size_t> parents;
    const std::size_t child = 1 + rng.index(7);
    for (std::size_t p = 0; p < child; ++p)
      if (rng.bernoulli(0.3)) parents.push_back(p);
    const double q = static_cast<double>(std::size_t{1} << parents.size());
    const double ll = bic_local(data, child, parents) + 0.5 * std::log(5000.0) * q;
    std::size_t extra = rng.index(child);
    if (std::find(parents.begin(), parents.end(), extra) != parents.end()) continue;
    auto more = parents;
    more.push_back(extra);
    const double ll_more = bic_local(data, child, more) + 0.5 * std::log(5000.0) * 2 * q;
    CHECK(ll_more >= ll - 1e-9);
  }

  // Changing one node's parents changes only its local term.
  for (int i = 0; i < 50; ++i) {
    const Dag a = dag::random_bn_dag(rng, vocab, 2.0 / 7.0);
    Dag b = a;
    const std::size_t child = 1 + rng.index(7), parent = rng.index(child);
    if (!b.add_edge(parent, child)) continue;
    std::vector<std::size_t> pa(a.predecessors(child).begin(), a.predecessors(child).end());
    std::vector<std::size_t> pb(b.predecessors(child).begin(), b.predecessors(child).end());
    const double delta = bic_local(data, child, pb) - bic_local(data, child, pa);
    CHECK(std::abs((scorer.score(b) - scorer.score(a)) - delta) < 1e-9);
  }

  const double truth = scorer.score(GroundTruthBn::asia().structure(vocab));
  int beaten = 0;
  for (int i = 0; i < 1000; ++i)
    if (scorer.score(dag::random_bn_dag(rng, vocab, 2.0 / 7.0)) < truth) ++beaten;
  CHECK(beaten >= 950);

  Dag seven(Domain::bayes_net);
  for (std::size_t k = 0; k < 7; ++k) seven.add_node(vocab.operation_types()[k]);
  CHECK(scorer.score(seven) == kInvalidBic);
  CHECK(bic_score(seven, data, vocab) == kInvalidBic);

  // Relabelled structures score the same.
  const Dag truth_dag = GroundTruthBn::asia().structure(vocab);
  std::vector<dag::NodeId> perm{7, 6, 5, 4, 3, 2, 1, 0};
  CHECK(scorer.score(dag::relabel(truth_dag, perm)) == truth);
}

TEST_CASE("dataset file round trip") {
  const auto path = std::filesystem::temp_directory_path() / ("dvae_bn_" + std::to_string(::getpid()) + ".txt");
  Rng rng(1);
  const auto data = random_dataset(rng, 4, 30);
  write_bn_data(path, data);
  CHECK(read_bn_data(path) == data);
  std::filesystem::remove(path);
}
