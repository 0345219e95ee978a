#include "dvae/model/encoder.hpp"

#include <stdexcept>
#include <string>

#include "dvae/core/rng.hpp"

namespace dvae::model {

GatedSum GatedSum::create(ad::ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                          Rng& rng) {
  GatedSum g;
  g.gate = ad::Linear::create(store, name + ".gate", in, out, true, rng);
  g.map = ad::Linear::create(store, name + ".map", in, out, false, rng);
  return g;
}

Var GatedSum::message(Tape& tape, Var feature) const {
  return ad::sigmoid(gate(tape, feature)) * map(tape, feature);
}

Var GatedSum::operator()(Tape& tape, std::span<const Var> features) const {
  if (features.empty()) return zero_vector(tape, out());
  Var total = message(tape, features[0]);
  for (std::size_t i = 1; i < features.size(); ++i) total = total + message(tape, features[i]);
  return total;
}

Var zero_vector(Tape& tape, std::size_t size) { return tape.constant(ad::Tensor(ad::Shape{size})); }

Var one_hot(Tape& tape, std::size_t size, std::size_t hot) { return tape.constant(ad::Tensor::one_hot(size, hot)); }

Var aggregate_plain(Tape& tape, const GatedSum& net, std::span<const Var> predecessor_hidden) {
  return net(tape, predecessor_hidden);
}

Var aggregate_nn(Tape& tape, const GatedSum& net, std::span<const IdentifiedHidden> predecessors, std::size_t id_cap) {
  std::vector<Var> features;
  features.reserve(predecessors.size());
  for (const auto& p : predecessors) {
    if (p.global_id >= id_cap) {
      throw std::out_of_range("global id " + std::to_string(p.global_id) + " is not below the cap " +
                              std::to_string(id_cap));
    }
    features.push_back(ad::concat(p.hidden, one_hot(tape, id_cap, p.global_id)));
  }
  return net(tape, features);
}

Var aggregate_bn(Tape& tape, const GatedSum& net, std::span<const Var> predecessor_types) {
  return net(tape, predecessor_types);
}

MessageBuilder::MessageBuilder(Tape& tape, const ModelConfig& config, const GatedSum& net)
    : tape_(tape), config_(config), net_(net) {}

Var MessageBuilder::type_one_hot(std::size_t type) {
  if (type_one_hots_.empty()) type_one_hots_.resize(config_.vocab.size());
  Var& slot = type_one_hots_.at(type);
  if (!slot.valid()) slot = one_hot(tape_, config_.vocab.size(), type);
  return slot;
}

Var MessageBuilder::message(Var hidden, std::size_t type, std::size_t global_id) {
  switch (config_.aggregator) {
    case Aggregator::plain: return net_.message(tape_, hidden);
    case Aggregator::neural_arch:
      if (global_id >= config_.max_nodes) {
        throw std::out_of_range("global id " + std::to_string(global_id) + " is not below the cap " +
                                std::to_string(config_.max_nodes));
      }
      return net_.message(tape_, ad::concat(hidden, one_hot(tape_, config_.max_nodes, global_id)));
    case Aggregator::bayes_net: {
      if (type_messages_.empty()) type_messages_.resize(config_.vocab.size());
      Var& slot = type_messages_.at(type);
      if (!slot.valid()) slot = net_.message(tape_, type_one_hot(type));
      return slot;
    }
  }
  throw std::logic_error("unknown aggregator");
}

Var MessageBuilder::sum(std::span<const Var> messages) {
  if (messages.empty()) {
    if (!zero_.valid()) zero_ = zero_vector(tape_, net_.out());
    return zero_;
  }
  Var total = messages[0];
  for (std::size_t i = 1; i < messages.size(); ++i) total = total + messages[i];
  return total;
}

Encoder Encoder::create(ad::ParameterStore& store, const ModelConfig& config, Rng& rng) {
  Encoder e;
  e.config_ = config;
  const std::size_t h = config.hidden, in = config.message_input_size(), types = config.vocab.size();
  e.forward_.gru = ad::GruCell::create(store, "enc.fwd.gru", types, h, rng);
  e.forward_.aggregate = GatedSum::create(store, "enc.fwd.agg", in, h, rng);
  if (config.bidirectional) {
    e.backward_.gru = ad::GruCell::create(store, "enc.bwd.gru", types, h, rng);
    e.backward_.aggregate = GatedSum::create(store, "enc.bwd.agg", in, h, rng);
    e.fuse_ = ad::Linear::create(store, "enc.fuse", 2 * h, h, true, rng);
  }
  e.mean_head_ = ad::Linear::create(store, "enc.mean", h, config.latent, true, rng);
  e.logvar_head_ = ad::Linear::create(store, "enc.logvar", h, config.latent, true, rng);
  return e;
}

ForwardPass Encoder::encode_forward(Tape& tape, const dag::Dag& dag, const dag::TopoOrder* order,
                                    bool reverse_direction) const {
  if (dag.node_count() == 0) throw std::invalid_argument("cannot encode an empty dag");
  if (reverse_direction && !config_.bidirectional) throw std::logic_error("encoder has no reverse direction");
  const dag::TopoOrder canonical = dag::topological_sort(dag);
  std::vector<std::size_t> global_id(dag.node_count());
  for (std::size_t rank = 0; rank < canonical.size(); ++rank) global_id[canonical[rank]] = rank;

  const dag::Dag working = reverse_direction ? dag::reverse_edges(dag) : dag;
  dag::TopoOrder visit;
  if (order) {
    if (!dag::is_topological_order(working, *order)) throw std::invalid_argument("order is not topological");
    visit = *order;
  } else {
    visit = reverse_direction ? dag::topological_sort(working) : canonical;
  }

  const EncoderDirection& dir = direction(reverse_direction);
  MessageBuilder builder(tape, config_, dir.aggregate);
  ForwardPass pass;
  pass.hidden.resize(dag.node_count());
  pass.incoming.resize(dag.node_count());
  std::vector<Var> outgoing(dag.node_count());
  for (dag::NodeId v : visit) {
    const auto& preds = working.predecessors(v);
    std::vector<Var> messages;
    messages.reserve(preds.size());
    for (dag::NodeId u : preds) messages.push_back(outgoing[u]);
    pass.incoming[v] = builder.sum(messages);
    pass.hidden[v] = dir.gru(tape, builder.type_one_hot(working.type(v)), pass.incoming[v]);
    if (working.out_degree(v) > 0) outgoing[v] = builder.message(pass.hidden[v], working.type(v), global_id[v]);
  }

  if (config_.aggregator == Aggregator::bayes_net) {
    pass.output = pass.hidden[visit[0]];
    for (std::size_t i = 1; i < visit.size(); ++i) pass.output = pass.output + pass.hidden[visit[i]];
  } else {
    const auto sinks = working.sinks();
    if (sinks.size() != 1) {
      throw std::invalid_argument("encoder needs a single ending node, found " + std::to_string(sinks.size()));
    }
    pass.output = pass.hidden[sinks[0]];
  }
  return pass;
}

LatentVars Encoder::encode(Tape& tape, const dag::Dag& dag) const {
  Var out = encode_forward(tape, dag).output;
  if (config_.bidirectional) out = fuse_(tape, ad::concat(out, encode_forward(tape, dag, nullptr, true).output));
  return {mean_head_(tape, out), logvar_head_(tape, out)};
}

}  // namespace dvae::model
