#pragma once

#include <cstddef>
#include <string_view>

#include "json.hpp"

#include "dvae/dag/vocab.hpp"

namespace dvae::model {

/// How a node's incoming message is built from its predecessors.
///   plain:       sum_u g(h_u) * m(h_u)
///   neural_arch: sum_u g([h_u, onehot(id_u)]) * m([h_u, onehot(id_u)])
///   bayes_net:   sum_u g(x_u) * m(x_u), x_u the parent's type one-hot
enum class Aggregator { plain, neural_arch, bayes_net };

std::string_view to_string(Aggregator a);
Aggregator aggregator_from_string(std::string_view s);

struct ModelConfig {
  dag::Domain domain = dag::Domain::generic;
  dag::Vocab vocab = dag::Vocab::neural_arch();
  std::size_t hidden = 64;
  std::size_t latent = 16;
  Aggregator aggregator = Aggregator::plain;
  bool bidirectional = false;
  /// Decoder node cap; also the width of the global-id one-hot.
  std::size_t max_nodes = 12;

  /// Domain defaults: neural-arch uses the id-aware aggregator with
  /// bidirectional encoding, bayes-net the type aggregator without it.
  static ModelConfig defaults_for(dag::Domain domain, dag::Vocab vocab);

  /// Input width of the gating and mapping nets.
  std::size_t message_input_size() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

}  // namespace dvae::model
