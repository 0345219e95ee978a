#include "dvae/model/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dvae/core/rng.hpp"
#include "dvae/dag/algorithms.hpp"
#include "dvae/dag/validity.hpp"

namespace dvae::model {

EdgeNet EdgeNet::create(ad::ParameterStore& store, const std::string& name, std::size_t hidden, bool with_context,
                        Rng& rng) {
  // Hidden width is twice the [h_j, h_i] input.
  EdgeNet e;
  e.source = ad::Linear::create(store, name + ".src", hidden, 4 * hidden, false, rng);
  e.target = ad::Linear::create(store, name + ".dst", hidden, 4 * hidden, true, rng);
  if (with_context) e.context = ad::Linear::create(store, name + ".ctx", hidden, 4 * hidden, false, rng);
  e.out = ad::Linear::create(store, name + ".out", 4 * hidden, 1, true, rng);
  return e;
}

Var EdgeNet::logit(Tape& tape, Var source_projection, Var target_projection) const {
  return ad::pick(out(tape, ad::relu(source_projection + target_projection)), 0);
}

Decoder Decoder::create(ad::ParameterStore& store, const ModelConfig& config, Rng& rng) {
  Decoder d;
  d.config_ = config;
  const std::size_t h = config.hidden, types = config.vocab.size();
  d.init_ = ad::Linear::create(store, "dec.init", config.latent, h, true, rng);
  d.gru_ = ad::GruCell::create(store, "dec.gru", types, h, rng);
  d.add_vertex_ = ad::Mlp2::create(store, "dec.add_vertex", h, 2 * h, types, rng);
  d.add_edge_ = EdgeNet::create(store, "dec.add_edge", h, config.aggregator == Aggregator::bayes_net, rng);
  d.aggregate_ = GatedSum::create(store, "dec.agg", config.message_input_size(), h, rng);
  return d;
}

GenerationState Decoder::init_state(Tape& tape, Var z) const {
  if (z.shape() != ad::Shape{config_.latent}) {
    throw ad::ShapeError("init_state: z has shape " + ad::to_string(z.shape()) + ", expected [" +
                         std::to_string(config_.latent) + "]");
  }
  GenerationState state;
  state.dag = dag::Dag(config_.domain);
  state.h0 = init_(tape, z);
  state.messages = std::make_shared<MessageBuilder>(tape, config_, aggregate_);
  if (add_edge_.has_context()) state.edge_context = add_edge_.context(tape, state.h0);
  return state;
}

Var Decoder::edge_target(Tape& tape, const GenerationState& state, Var hidden) const {
  const Var t = add_edge_.target(tape, hidden);
  return state.edge_context.valid() ? t + state.edge_context : t;
}

Var Decoder::vertex_logits(Tape& tape, const GenerationState& state) const {
  return add_vertex_(tape, state.graph_state);
}

Var Decoder::node_hidden(Tape& tape, GenerationState& state, dag::NodeId v) const {
  Var incoming;
  if (v == 0) {
    incoming = state.h0;
  } else {
    const auto& preds = state.dag.predecessors(v);
    std::vector<Var> messages;
    messages.reserve(preds.size());
    for (dag::NodeId u : preds) messages.push_back(state.outgoing[u]);
    incoming = state.messages->sum(messages);
  }
  return gru_(tape, state.messages->type_one_hot(state.dag.type(v)), incoming);
}

void Decoder::finalize_node(Tape& tape, GenerationState& state, dag::NodeId v) const {
  const Var h = state.hidden[v];
  state.outgoing[v] = state.messages->message(h, state.dag.type(v), v);
  state.edge_source[v] = add_edge_.source(tape, h);
  if (config_.aggregator == Aggregator::bayes_net && state.graph_state.valid()) {
    state.graph_state = state.graph_state + h;
  } else {
    state.graph_state = h;
  }
}

namespace {

std::size_t sample_categorical(const ad::Tensor& logits, Rng& rng) {
  const auto v = logits.values();
  const double top = *std::max_element(v.begin(), v.end());
  std::vector<double> w(v.size());
  double total = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) total += (w[k] = std::exp(v[k] - top));
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (u < w[k]) return k;
    u -= w[k];
  }
  return w.size() - 1;
}

}  // namespace

std::size_t Decoder::step_add_vertex(Tape& tape, GenerationState& state, Rng* rng,
                                     std::optional<std::size_t> forced, const DecodeOptions& options) const {
  if (state.finished) throw std::logic_error("step_add_vertex: generation already finished");
  const std::size_t n = state.dag.node_count();
  const std::size_t end = config_.vocab.end();
  std::size_t type;
  if (n == 0) {
    type = config_.vocab.start();
  } else if (n + 1 >= node_cap(options)) {
    type = end;
  } else {
    const Var logits = vertex_logits(tape, state);
    if (forced) {
      if (*forced >= config_.vocab.size()) throw std::out_of_range("forced type out of range");
      type = *forced;
      state.log_terms.push_back(ad::pick(ad::log_softmax(logits), type));
    } else {
      if (!rng) throw std::invalid_argument("step_add_vertex needs an rng or a forced type");
      type = sample_categorical(logits.value(), *rng);
    }
  }

  const dag::NodeId v = state.dag.add_node(type);
  state.hidden.emplace_back();
  state.outgoing.emplace_back();
  state.edge_source.emplace_back();
  if (type == end && n > 0) {
    for (dag::NodeId u = 0; u < v; ++u)
      if (state.dag.out_degree(u) == 0) state.dag.add_edge(u, v);
    state.finished = true;
    return type;
  }
  state.hidden[v] = node_hidden(tape, state, v);
  if (v == 0) finalize_node(tape, state, v);
  return type;
}

void Decoder::step_add_edges(Tape& tape, GenerationState& state, Rng* rng,
                             const std::vector<dag::NodeId>* forced_predecessors,
                             const DecodeOptions& options) const {
  if (state.finished || state.dag.node_count() <= 1) return;
  const dag::NodeId i = state.dag.node_count() - 1;
  if (!forced_predecessors && !rng) throw std::invalid_argument("step_add_edges needs an rng or forced edges");
  const bool main_path = config_.domain == dag::Domain::neural_arch;
  Var target = edge_target(tape, state, state.hidden[i]);
  bool added = false;
  for (dag::NodeId j = i; j-- > 0;) {
    bool edge;
    if (forced_predecessors) {
      edge = std::binary_search(forced_predecessors->begin(), forced_predecessors->end(), j);
      const Var logit = add_edge_.logit(tape, state.edge_source[j], target);
      state.log_terms.push_back(ad::log_sigmoid(edge ? logit : ad::scale(logit, -1.0)));
    } else if (main_path && j + 1 == i) {
      edge = true;
    } else {
      const double logit = add_edge_.logit(tape, state.edge_source[j], target).value().item();
      edge = rng->uniform() < 1.0 / (1.0 + std::exp(-logit));
    }
    if (!edge) continue;
    state.dag.add_edge(j, i);
    added = true;
    if (options.update_on_edge) {
      state.hidden[i] = node_hidden(tape, state, i);
      target = edge_target(tape, state, state.hidden[i]);
    }
  }
  if (added && !options.update_on_edge) state.hidden[i] = node_hidden(tape, state, i);
  finalize_node(tape, state, i);
}

void Decoder::check_target(const dag::Dag& target, const DecodeOptions& options) const {
  auto reject = [](const std::string& why) { throw std::invalid_argument("invalid decoder target: " + why); };
  const std::size_t n = target.node_count();
  if (n < 2) reject("fewer than two nodes");
  if (n > node_cap(options)) reject(std::to_string(n) + " nodes exceed the cap " + std::to_string(node_cap(options)));
  if (target.domain() != config_.domain) reject("domain mismatch");
  const auto& vocab = config_.vocab;
  if (target.type(0) != vocab.start()) reject("node 0 is not the starting type");
  if (target.type(n - 1) != vocab.end()) reject("last node is not the ending type");
  for (dag::NodeId v = 1; v + 1 < n; ++v) {
    if (target.type(v) >= vocab.size() || vocab.is_virtual(target.type(v))) {
      reject("node " + std::to_string(v) + " has a reserved or unknown type");
    }
  }
  for (const auto& [u, v] : target.edges())
    if (u >= v) reject("edge (" + std::to_string(u) + "," + std::to_string(v) + ") is not in generation order");
  for (dag::NodeId u = 0; u + 1 < n; ++u) {
    const auto& succ = target.successors(u);
    const bool loose = succ.size() == 1 && succ[0] == n - 1;
    if (succ.empty()) reject("node " + std::to_string(u) + " has no successor");
    if (target.has_edge(u, n - 1) && !loose) reject("ending node has a predecessor that is not a loose end");
  }
  const auto report = dag::check_domain_validity(dag::to_domain_space(target, vocab), vocab);
  if (!report.valid()) reject("fails its domain validity check (" + report.to_string() + ")");
}

GenerationState Decoder::run(Tape& tape, Var z, Rng* rng, const dag::Dag* target,
                             const DecodeOptions& options) const {
  if (target) check_target(*target, options);
  GenerationState state = init_state(tape, z);
  for (dag::NodeId v = 0; !state.finished; ++v) {
    std::optional<std::size_t> forced;
    if (target) forced = target->type(v);
    step_add_vertex(tape, state, rng, forced, options);
    step_add_edges(tape, state, rng, target ? &target->predecessors(v) : nullptr, options);
  }
  return state;
}

dag::Dag Decoder::decode_sample(Tape& tape, Var z, Rng& rng, const DecodeOptions& options) const {
  if (node_cap(options) < 2) throw std::invalid_argument("node cap must be at least 2");
  return run(tape, z, &rng, nullptr, options).dag;
}

Var Decoder::teacher_forcing_nll(Tape& tape, Var z, const dag::Dag& target, const DecodeOptions& options) const {
  GenerationState state = run(tape, z, nullptr, &target, options);
  Var total = state.log_terms.at(0);
  for (std::size_t k = 1; k < state.log_terms.size(); ++k) total = total + state.log_terms[k];
  return ad::scale(total, -1.0);
}

dag::Dag Decoder::teacher_reconstruct(Tape& tape, Var z, const dag::Dag& target, const DecodeOptions& options) const {
  return run(tape, z, nullptr, &target, options).dag;
}

}  // namespace dvae::model
