#include "dvae/model/config.hpp"

#include <stdexcept>
#include <string>

namespace dvae::model {

std::string_view to_string(Aggregator a) {
  switch (a) {
    case Aggregator::plain: return "plain";
    case Aggregator::neural_arch: return "neural-arch";
    case Aggregator::bayes_net: return "bayes-net";
  }
  return "?";
}

Aggregator aggregator_from_string(std::string_view s) {
  if (s == "plain") return Aggregator::plain;
  if (s == "neural-arch") return Aggregator::neural_arch;
  if (s == "bayes-net") return Aggregator::bayes_net;
  throw std::invalid_argument("unknown aggregator '" + std::string(s) + "'");
}

ModelConfig ModelConfig::defaults_for(dag::Domain domain, dag::Vocab vocab) {
  ModelConfig c;
  c.domain = domain;
  c.vocab = std::move(vocab);
  switch (domain) {
    case dag::Domain::neural_arch:
      c.aggregator = Aggregator::neural_arch;
      c.bidirectional = true;
      break;
    case dag::Domain::bayes_net:
      c.aggregator = Aggregator::bayes_net;
      c.bidirectional = false;
      break;
    case dag::Domain::generic:
      c.aggregator = Aggregator::plain;
      c.bidirectional = false;
      break;
  }
  return c;
}

std::size_t ModelConfig::message_input_size() const {
  switch (aggregator) {
    case Aggregator::plain: return hidden;
    case Aggregator::neural_arch: return hidden + max_nodes;
    case Aggregator::bayes_net: return vocab.size();
  }
  return hidden;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"domain", std::string(dag::to_string(domain))},
          {"vocab", vocab.to_json()},
          {"hidden", hidden},
          {"latent", latent},
          {"aggregator", std::string(to_string(aggregator))},
          {"bidirectional", bidirectional},
          {"max_nodes", max_nodes}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.domain = dag::domain_from_string(j.at("domain").get<std::string>());
  c.vocab = dag::Vocab::from_json(j.at("vocab"));
  c.hidden = j.at("hidden").get<std::size_t>();
  c.latent = j.at("latent").get<std::size_t>();
  c.aggregator = aggregator_from_string(j.at("aggregator").get<std::string>());
  c.bidirectional = j.at("bidirectional").get<bool>();
  c.max_nodes = j.at("max_nodes").get<std::size_t>();
  if (c.hidden == 0 || c.latent == 0 || c.max_nodes < 2) throw std::invalid_argument("invalid model sizes");
  return c;
}

}  // namespace dvae::model
