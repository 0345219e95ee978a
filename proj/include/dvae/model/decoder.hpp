#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dvae/ad/layers.hpp"
#include "dvae/dag/dag.hpp"
#include "dvae/model/config.hpp"
#include "dvae/model/encoder.hpp"

namespace dvae {
class Rng;
}

namespace dvae::model {

struct DecodeOptions {
  /// Recompute h_{v_i} after every accepted edge. Off only for the ablation.
  bool update_on_edge = true;
  /// Overrides the configured node cap when nonzero.
  std::size_t node_cap = 0;
};

struct GenerationState {
  dag::Dag dag;
  std::vector<Var> hidden;
  /// Pending incoming message for the first node.
  Var h0;
  /// h of the last node, or the running sum of all node states (bayes-net).
  Var graph_state;
  bool finished = false;
  /// Log-probabilities of the decisions taken in teacher mode.
  std::vector<Var> log_terms;

  // Per-node caches: outgoing message and the f_add_edge projection of h_j.
  std::vector<Var> outgoing;
  std::vector<Var> edge_source;
  /// f_add_edge projection of h_0 (bayes-net only).
  Var edge_context;
  std::shared_ptr<MessageBuilder> messages;
};

/// f_add_edge(h_j, h_i) = W2 relu(W_a h_j + W_b h_i + b1) + b2; the first
/// layer acting on [h_j, h_i] is stored as its two column blocks so that the
/// projection of every earlier node can be cached.
///
/// With the bayes-net aggregator node states only see their parents' types,
/// so h_0 never reaches them; the input is then [h_j, h_i, h_0] and the
/// third block is `context`.
struct EdgeNet {
  ad::Linear source;
  ad::Linear target;
  ad::Linear out;
  ad::Linear context;

  static EdgeNet create(ad::ParameterStore& store, const std::string& name, std::size_t hidden, bool with_context,
                        Rng& rng);
  bool has_context() const { return context.weight != ad::kNoSlot; }
  /// Both arguments are first-layer projections; the target one carries b1.
  Var logit(Tape& tape, Var source_projection, Var target_projection) const;
};

class Decoder {
 public:
  static Decoder create(ad::ParameterStore& store, const ModelConfig& config, Rng& rng);

  std::size_t node_cap(const DecodeOptions& options) const {
    return options.node_cap ? options.node_cap : config_.max_nodes;
  }

  /// h_0 = W z + b.
  GenerationState init_state(Tape& tape, Var z) const;
  /// Type logits for the next node given the current graph state.
  Var vertex_logits(Tape& tape, const GenerationState& state) const;
  /// Adds the next node. The first node is always START. Types are sampled
  /// from rng, or `forced` in teacher mode (its log-probability is recorded).
  /// END stops generation and connects every loose end to the new node.
  /// When the cap would be exceeded END is forced without being scored.
  std::size_t step_add_vertex(Tape& tape, GenerationState& state, Rng* rng, std::optional<std::size_t> forced,
                              const DecodeOptions& options = {}) const;
  /// Edge decisions into the newest node, for j = i-1 down to 0. In teacher
  /// mode `forced_predecessors` (sorted) gives the true edges.
  void step_add_edges(Tape& tape, GenerationState& state, Rng* rng,
                      const std::vector<dag::NodeId>* forced_predecessors, const DecodeOptions& options = {}) const;

  /// Samples one dag in model space.
  dag::Dag decode_sample(Tape& tape, Var z, Rng& rng, const DecodeOptions& options = {}) const;
  /// -sum of log-probabilities of every decision needed to generate `target`.
  Var teacher_forcing_nll(Tape& tape, Var z, const dag::Dag& target, const DecodeOptions& options = {}) const;
  /// Rebuilds `target` by forcing every decision; returns the generated dag.
  dag::Dag teacher_reconstruct(Tape& tape, Var z, const dag::Dag& target, const DecodeOptions& options = {}) const;

  /// Throws std::invalid_argument unless `target` is a model-space dag the
  /// decoder can generate.
  void check_target(const dag::Dag& target, const DecodeOptions& options = {}) const;

  const ModelConfig& config() const { return config_; }

 private:
  Var node_hidden(Tape& tape, GenerationState& state, dag::NodeId v) const;
  Var edge_target(Tape& tape, const GenerationState& state, Var hidden) const;
  void finalize_node(Tape& tape, GenerationState& state, dag::NodeId v) const;
  GenerationState run(Tape& tape, Var z, Rng* rng, const dag::Dag* target, const DecodeOptions& options) const;

  ModelConfig config_;
  ad::Linear init_;
  ad::GruCell gru_;
  ad::Mlp2 add_vertex_;
  EdgeNet add_edge_;
  GatedSum aggregate_;

  friend class DVae;
};

}  // namespace dvae::model
