#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dvae/ad/layers.hpp"
#include "dvae/dag/algorithms.hpp"
#include "dvae/dag/dag.hpp"
#include "dvae/model/config.hpp"

namespace dvae {
class Rng;
}

namespace dvae::model {

using ad::Tape;
using ad::Var;

/// Gating net g (linear + sigmoid) and mapping net m (linear, no bias).
struct GatedSum {
  ad::Linear gate;
  ad::Linear map;

  static GatedSum create(ad::ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                         Rng& rng);
  /// g(f) * m(f) for one predecessor feature.
  Var message(Tape& tape, Var feature) const;
  /// Sum of messages; the zero vector of width `out` when empty.
  Var operator()(Tape& tape, std::span<const Var> features) const;
  std::size_t out() const { return map.out; }
};

Var zero_vector(Tape& tape, std::size_t size);
Var one_hot(Tape& tape, std::size_t size, std::size_t hot);

/// Incoming message from predecessor hidden states.
Var aggregate_plain(Tape& tape, const GatedSum& net, std::span<const Var> predecessor_hidden);

struct IdentifiedHidden {
  Var hidden;
  std::size_t global_id;
};
/// Incoming message from predecessor hidden states tagged with their global
/// ids; `id_cap` is the one-hot width and ids must stay below it.
Var aggregate_nn(Tape& tape, const GatedSum& net, std::span<const IdentifiedHidden> predecessors, std::size_t id_cap);

/// Incoming message from predecessor type one-hots.
Var aggregate_bn(Tape& tape, const GatedSum& net, std::span<const Var> predecessor_types);

/// Per-node feature fed to the aggregator, plus a per-tape cache of type
/// one-hots. Shared by the encoder and decoder.
class MessageBuilder {
 public:
  MessageBuilder(Tape& tape, const ModelConfig& config, const GatedSum& net);
  Var type_one_hot(std::size_t type);
  /// g(f_u) * m(f_u) for predecessor u; bayes-net messages are cached per type.
  Var message(Var hidden, std::size_t type, std::size_t global_id);
  /// Sum in the given order; zero vector when empty.
  Var sum(std::span<const Var> messages);

 private:
  Tape& tape_;
  const ModelConfig& config_;
  const GatedSum& net_;
  std::vector<Var> type_one_hots_;
  std::vector<Var> type_messages_;
  Var zero_;
};

struct EncoderDirection {
  ad::GruCell gru;
  GatedSum aggregate;
};

struct ForwardPass {
  /// hidden[v] for every node id.
  std::vector<Var> hidden;
  /// Ending-node state, or the sum of all node states for bayes-net.
  Var output;
  /// Incoming message of each node (zero vector for sources).
  std::vector<Var> incoming;
};

struct LatentVars {
  Var mean;
  Var logvar;
};

class Encoder {
 public:
  static Encoder create(ad::ParameterStore& store, const ModelConfig& config, Rng& rng);

  /// Asynchronous message passing: nodes are processed in `order` (the
  /// canonical topological order when null), each after all predecessors.
  /// Global ids are the canonical topological ranks, so the result does not
  /// depend on node labels or on the processing order chosen.
  ForwardPass encode_forward(Tape& tape, const dag::Dag& dag, const dag::TopoOrder* order = nullptr,
                             bool reverse_direction = false) const;
  /// Posterior parameters; bidirectional mode fuses the forward and the
  /// edge-reversed ending states through a linear map.
  LatentVars encode(Tape& tape, const dag::Dag& dag) const;

  const ModelConfig& config() const { return config_; }

 private:
  const EncoderDirection& direction(bool reverse) const { return reverse ? backward_ : forward_; }

  ModelConfig config_;
  EncoderDirection forward_;
  EncoderDirection backward_;
  ad::Linear fuse_;
  ad::Linear mean_head_;
  ad::Linear logvar_head_;

  friend class DVae;
};

}  // namespace dvae::model
