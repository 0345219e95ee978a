#pragma once

#include <cmath>
#include <vector>

#include "dvae/ad/layers.hpp"
#include "dvae/core/rng.hpp"
#include "dvae/dag/algorithms.hpp"
#include "dvae/dag/generators.hpp"
#include "dvae/model/dvae.hpp"

namespace testing {

using dvae::Rng;
using dvae::ad::Tensor;

inline Tensor random_tensor(Rng& rng, dvae::ad::Shape shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

inline void randomize(dvae::ad::ParameterStore& store, Rng& rng, double scale = 0.5) {
  for (auto& p : store)
    for (double& v : p.value.values()) v = scale * rng.normal();
}

inline std::vector<double> as_vector(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

// Plain double arithmetic, independent of the tape.
inline std::vector<double> matvec(const Tensor& w, const std::vector<double>& x) {
  std::vector<double> y(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) y[r] += w.at(r, c) * x[c];
  return y;
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

inline std::vector<double> linear(const dvae::ad::ParameterStore& s, const dvae::ad::Linear& l,
                                  const std::vector<double>& x) {
  auto y = matvec(s[l.weight].value, x);
  if (l.bias != dvae::ad::kNoSlot)
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += s[l.bias].value[i];
  return y;
}

inline std::vector<double> gru(const dvae::ad::ParameterStore& s, const dvae::ad::GruCell& cell,
                               const std::vector<double>& x, const std::vector<double>& h) {
  const std::size_t n = cell.hidden;
  const auto gx = linear(s, cell.input, x);
  const auto gh = matvec(s[cell.recurrent_rz].value, h);
  std::vector<double> r(n), z(n), rh(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = sigmoid(gx[i] + gh[i]);
    z[i] = sigmoid(gx[n + i] + gh[n + i]);
    rh[i] = r[i] * h[i];
  }
  const auto un = matvec(s[cell.recurrent_n].value, rh);
  for (std::size_t i = 0; i < n; ++i) {
    const double cand = std::tanh(gx[2 * n + i] + un[i]);
    out[i] = z[i] * h[i] + (1.0 - z[i]) * cand;
  }
  return out;
}

inline dvae::model::ModelConfig toy_config(dvae::dag::Domain domain, std::size_t hidden = 6, std::size_t latent = 3,
                                           std::size_t max_nodes = 12) {
  const auto vocab = domain == dvae::dag::Domain::neural_arch ? dvae::dag::Vocab::neural_arch()
                                                               : dvae::dag::Vocab::bayes_net();
  auto c = dvae::model::ModelConfig::defaults_for(domain, vocab);
  c.hidden = hidden;
  c.latent = latent;
  c.max_nodes = max_nodes;
  return c;
}

inline dvae::model::ModelConfig plain_config(std::size_t hidden = 6, std::size_t latent = 3) {
  auto c = toy_config(dvae::dag::Domain::neural_arch, hidden, latent);
  c.aggregator = dvae::model::Aggregator::plain;
  c.bidirectional = false;
  return c;
}

/// Random dag of the given domain in model space.
inline dvae::dag::Dag random_model_dag(Rng& rng, dvae::dag::Domain domain) {
  using namespace dvae::dag;
  if (domain == Domain::neural_arch) return random_nn_dag(rng, 2 + rng.index(5), Vocab::neural_arch());
  const auto vocab = Vocab::bayes_net();
  return to_model_space(random_bn_dag(rng, vocab, default_bn_edge_prob(8)), vocab);
}

}  // namespace testing
