#include "dvae/dag/generators.hpp"

#include <stdexcept>

#include "dvae/core/rng.hpp"
#include "dvae/dag/algorithms.hpp"

namespace dvae::dag {

Dag random_nn_dag(Rng& rng, std::size_t layers, const Vocab& vocab, double skip_prob) {
  if (layers < 1) throw std::invalid_argument("random_nn_dag needs at least one layer");
  if (!(skip_prob >= 0.0 && skip_prob <= 1.0)) throw std::invalid_argument("skip_prob must lie in [0, 1]");
  const auto ops = vocab.operation_types();
  Dag dag(Domain::neural_arch);
  dag.add_node(vocab.start());
  for (std::size_t i = 0; i < layers; ++i) dag.add_node(ops[rng.index(ops.size())]);
  const NodeId output = dag.add_node(vocab.end());
  for (NodeId v = 1; v <= layers; ++v) {
    dag.add_edge(v - 1, v);
    for (NodeId u = 0; u + 1 < v; ++u)
      if (rng.bernoulli(skip_prob)) dag.add_edge(u, v);
  }
  dag.add_edge(output - 1, output);
  return dag;
}

double default_bn_edge_prob(std::size_t k) {
  if (k < 2) throw std::invalid_argument("default_bn_edge_prob needs k >= 2");
  return 2.0 / static_cast<double>(k - 1);
}

Dag random_bn_dag(Rng& rng, const Vocab& vocab, double edge_prob) {
  const auto vars = vocab.operation_types();
  if (vars.size() < 2) throw std::invalid_argument("random_bn_dag needs at least two variables");
  Dag dag(Domain::bayes_net);
  for (std::size_t t : vars) dag.add_node(t);
  for (NodeId j = 1; j < vars.size(); ++j)
    for (NodeId i = 0; i < j; ++i)
      if (rng.bernoulli(edge_prob)) dag.add_edge(i, j);
  return dag;
}

Dag random_generic_dag(Rng& rng, std::size_t n, const Vocab& vocab, double edge_prob) {
  const auto ops = vocab.operation_types();
  Dag inner(Domain::generic);
  for (std::size_t i = 0; i < n; ++i) inner.add_node(ops[rng.index(ops.size())]);
  for (NodeId j = 1; j < n; ++j)
    for (NodeId i = 0; i < j; ++i)
      if (rng.bernoulli(edge_prob)) inner.add_edge(i, j);
  return to_model_space(inner, vocab);
}

}  // namespace dvae::dag
