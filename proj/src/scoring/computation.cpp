#include "dvae/scoring/computation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dvae/core/rng.hpp"
#include "dvae/dag/algorithms.hpp"
#include "dvae/dag/generators.hpp"
#include "dvae/dag/validity.hpp"

namespace dvae::scoring {

namespace {

double activate(Nonlinearity f, double v) {
  switch (f) {
    case Nonlinearity::identity: return v;
    case Nonlinearity::tanh: return std::tanh(v);
    case Nonlinearity::leaky_relu: return v > 0.0 ? v : 0.1 * v;
    case Nonlinearity::sine: return std::sin(v);
  }
  return v;
}

Transfer identity_transfer(std::size_t dim) {
  Transfer t;
  t.weight.assign(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) t.weight[i * dim + i] = 1.0;
  t.bias.assign(dim, 0.0);
  return t;
}

}  // namespace

OpSemantics::OpSemantics(const dag::Vocab& vocab, std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("signal dimension must be positive");
  transfers_.assign(vocab.size(), identity_transfer(dim));
}

OpSemantics OpSemantics::from_seed(const dag::Vocab& vocab, std::uint64_t seed, std::size_t dim) {
  OpSemantics s(vocab, dim);
  Rng rng(seed);
  constexpr Nonlinearity cycle[] = {Nonlinearity::tanh, Nonlinearity::leaky_relu, Nonlinearity::sine};
  const double w_scale = 1.2 / std::sqrt(static_cast<double>(dim));
  std::size_t k = 0;
  for (std::size_t type : vocab.operation_types()) {
    Transfer t;
    t.weight.resize(dim * dim);
    for (double& w : t.weight) w = w_scale * rng.normal();
    t.bias.resize(dim);
    for (double& b : t.bias) b = 0.3 * rng.normal();
    t.f = cycle[k++ % 3];
    s.set(type, std::move(t));
  }
  return s;
}

void OpSemantics::set(std::size_t type, Transfer t) {
  if (t.weight.size() != dim_ * dim_ || t.bias.size() != dim_) throw std::invalid_argument("transfer size mismatch");
  transfers_.at(type) = std::move(t);
}

std::vector<double> OpSemantics::apply(std::size_t type, std::span<const double> x) const {
  if (type >= transfers_.size()) throw std::out_of_range("no semantics for type " + std::to_string(type));
  if (x.size() != dim_) throw std::invalid_argument("signal has the wrong dimension");
  const Transfer& t = transfers_[type];
  std::vector<double> y(dim_);
  for (std::size_t r = 0; r < dim_; ++r) {
    double acc = t.bias[r];
    for (std::size_t c = 0; c < dim_; ++c) acc += t.weight[r * dim_ + c] * x[c];
    y[r] = activate(t.f, acc);
  }
  return y;
}

std::vector<double> eval_computation(const dag::Dag& dag, const OpSemantics& semantics, std::span<const double> x) {
  const auto sinks = dag.sinks();
  if (sinks.size() != 1) throw std::invalid_argument("eval_computation needs a single sink");
  const std::size_t dim = semantics.dim();
  std::vector<std::vector<double>> out(dag.node_count());
  std::vector<double> in(dim);
  for (dag::NodeId v : dag::topological_sort(dag)) {
    const auto& preds = dag.predecessors(v);
    if (preds.empty()) {
      in.assign(x.begin(), x.end());
    } else {
      in.assign(dim, 0.0);
      for (dag::NodeId u : preds)
        for (std::size_t i = 0; i < dim; ++i) in[i] += out[u][i];
      for (double& e : in) e /= static_cast<double>(preds.size());
    }
    out[v] = semantics.apply(dag.type(v), in);
  }
  return out[sinks[0]];
}

ProxyOracle::ProxyOracle(OpSemantics semantics, std::vector<std::vector<double>> probes, const dag::Dag& target)
    : semantics_(std::move(semantics)), probes_(std::move(probes)), target_(target) {
  if (probes_.empty()) throw std::invalid_argument("proxy oracle needs probes");
  for (const auto& x : probes_) targets_.push_back(eval_computation(target_, semantics_, x));
}

const ProxyOracle& ProxyOracle::standard() {
  static const ProxyOracle oracle = [] {
    const auto vocab = dag::Vocab::neural_arch();
    Rng rng(kSemanticsSeed + 1);
    std::vector<std::vector<double>> probes(kProbeCount, std::vector<double>(kSignalDim));
    for (auto& x : probes)
      for (double& e : x) e = rng.normal();
    const dag::Dag target = dag::random_nn_dag(rng, 6, vocab);
    return ProxyOracle(OpSemantics::from_seed(vocab), std::move(probes), target);
  }();
  return oracle;
}

double ProxyOracle::computation_score(const dag::Dag& dag) const {
  double total = 0.0;
  for (std::size_t k = 0; k < probes_.size(); ++k) {
    const auto y = eval_computation(dag, semantics_, probes_[k]);
    for (std::size_t i = 0; i < y.size(); ++i) total += (y[i] - targets_[k][i]) * (y[i] - targets_[k][i]);
  }
  return std::exp(-total / static_cast<double>(probes_.size()));
}

double nn_proxy_score(const dag::Dag& dag) {
  static const dag::Vocab vocab = dag::Vocab::neural_arch();
  if (!dag::validity_check_nn(dag, vocab).valid()) return 0.0;
  return ProxyOracle::standard().computation_score(dag);
}

}  // namespace dvae::scoring
