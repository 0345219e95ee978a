#include "dvae/dag/algorithms.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <queue>
#include <set>

#include "dvae/core/rng.hpp"

namespace dvae::dag {
namespace {

[[noreturn]] void throw_cycle(const Dag& dag, const std::vector<std::size_t>& remaining_in) {
  // Every unprocessed node still has an unprocessed predecessor; walking
  // predecessors must revisit a node, and that node is on a cycle.
  NodeId v = 0;
  while (remaining_in[v] == 0) ++v;
  std::vector<bool> seen(dag.node_count(), false);
  while (!seen[v]) {
    seen[v] = true;
    for (NodeId u : dag.predecessors(v)) {
      if (remaining_in[u] != 0) {
        v = u;
        break;
      }
    }
  }
  throw CycleError(v, "graph contains a cycle through node " + std::to_string(v));
}

template <class Pick>
TopoOrder kahn(const Dag& dag, Pick&& pick) {
  const std::size_t n = dag.node_count();
  std::vector<std::size_t> indeg(n);
  std::vector<NodeId> ready;
  for (NodeId v = 0; v < n; ++v)
    if ((indeg[v] = dag.in_degree(v)) == 0) ready.push_back(v);
  TopoOrder order;
  order.reserve(n);
  while (!ready.empty()) {
    const std::size_t k = pick(ready);
    const NodeId v = ready[k];
    ready.erase(ready.begin() + static_cast<std::ptrdiff_t>(k));
    order.push_back(v);
    for (NodeId w : dag.successors(v))
      if (--indeg[w] == 0) ready.push_back(w);
  }
  if (order.size() != n) throw_cycle(dag, indeg);
  return order;
}

}  // namespace

TopoOrder topological_sort(const Dag& dag) {
  return kahn(dag, [](const std::vector<NodeId>& ready) {
    return static_cast<std::size_t>(std::min_element(ready.begin(), ready.end()) - ready.begin());
  });
}

TopoOrder random_topological_order(const Dag& dag, Rng& rng) {
  return kahn(dag, [&](const std::vector<NodeId>& ready) { return rng.index(ready.size()); });
}

bool is_acyclic(const Dag& dag) {
  try {
    topological_sort(dag);
    return true;
  } catch (const CycleError&) {
    return false;
  }
}

bool is_topological_order(const Dag& dag, const TopoOrder& order) {
  if (order.size() != dag.node_count()) return false;
  std::vector<std::size_t> pos(dag.node_count(), dag.node_count());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] >= dag.node_count() || pos[order[i]] != dag.node_count()) return false;
    pos[order[i]] = i;
  }
  for (const auto& [u, v] : dag.edges())
    if (pos[u] >= pos[v]) return false;
  return true;
}

Dag relabel(const Dag& dag, const std::vector<NodeId>& perm) {
  const std::size_t n = dag.node_count();
  if (perm.size() != n) throw std::invalid_argument("relabel: permutation size differs from node count");
  std::vector<NodeId> inverse(n, n);
  for (NodeId v = 0; v < n; ++v) {
    if (perm[v] >= n || inverse[perm[v]] != n) throw std::invalid_argument("relabel: not a permutation");
    inverse[perm[v]] = v;
  }
  Dag out(dag.domain());
  for (NodeId i = 0; i < n; ++i) out.add_node(dag.type(inverse[i]));
  for (const auto& [u, v] : dag.edges()) out.add_edge(perm[u], perm[v]);
  return out;
}

Dag canonicalize(const Dag& dag) {
  const TopoOrder order = topological_sort(dag);
  std::vector<NodeId> perm(dag.node_count());
  for (std::size_t i = 0; i < order.size(); ++i) perm[order[i]] = i;
  return relabel(dag, perm);
}

Dag reverse_edges(const Dag& dag) {
  Dag out(dag.domain());
  for (NodeId v = 0; v < dag.node_count(); ++v) out.add_node(dag.type(v));
  for (const auto& [u, v] : dag.edges()) out.add_edge(v, u);
  return out;
}

namespace {

Dag with_endpoints(const Dag& dag, const Vocab& vocab, bool add_start, bool add_end) {
  const std::vector<NodeId> sources = dag.sources();
  const std::vector<NodeId> sinks = dag.sinks();
  const std::size_t shift = add_start ? 1 : 0;
  Dag out(dag.domain());
  if (add_start) out.add_node(vocab.start());
  for (NodeId v = 0; v < dag.node_count(); ++v) out.add_node(dag.type(v));
  for (const auto& [u, v] : dag.edges()) out.add_edge(u + shift, v + shift);
  if (add_start)
    for (NodeId s : sources) out.add_edge(0, s + shift);
  if (add_end) {
    const NodeId end = out.add_node(vocab.end());
    for (NodeId s : sinks) out.add_edge(s + shift, end);
  }
  return out;
}

}  // namespace

Dag ensure_single_endpoints(const Dag& dag, const Vocab& vocab) {
  return with_endpoints(dag, vocab, dag.sources().size() > 1, dag.sinks().size() > 1);
}

Dag to_model_space(const Dag& dag, const Vocab& vocab) {
  const auto sources = dag.sources();
  const auto sinks = dag.sinks();
  const bool has_start = sources.size() == 1 && dag.type(sources[0]) == vocab.start();
  const bool has_end = sinks.size() == 1 && dag.type(sinks[0]) == vocab.end();
  return canonicalize(with_endpoints(dag, vocab, !has_start, !has_end));
}

Dag to_domain_space(const Dag& dag, const Vocab& vocab) {
  if (dag.domain() != Domain::bayes_net || dag.node_count() == 0) return dag;
  const std::size_t n = dag.node_count();
  const bool drop_first = dag.type(0) == vocab.start();
  const bool drop_last = n > (drop_first ? 1u : 0u) && dag.type(n - 1) == vocab.end();
  const NodeId first = drop_first ? 1 : 0;
  const NodeId last = drop_last ? n - 1 : n;  // exclusive
  Dag out(dag.domain());
  for (NodeId v = first; v < last; ++v) out.add_node(dag.type(v));
  for (const auto& [u, v] : dag.edges())
    if (u >= first && u < last && v >= first && v < last) out.add_edge(u - first, v - first);
  return out;
}

Dag unshare_expand(const Dag& dag, std::size_t node_cap) {
  const auto sinks = dag.sinks();
  if (sinks.size() != 1) throw std::invalid_argument("unshare_expand needs a single sink");
  const TopoOrder order = topological_sort(dag);

  // paths[v] = number of distinct paths v -> sink.
  std::vector<std::size_t> paths(dag.node_count(), 0);
  std::size_t total = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    if (dag.successors(v).empty()) {
      paths[v] = 1;
    } else {
      for (NodeId w : dag.successors(v)) {
        paths[v] += paths[w];
        if (paths[v] > node_cap) throw std::length_error("unshare_expand exceeds node cap " + std::to_string(node_cap));
      }
    }
    total += paths[v];
    if (total > node_cap) throw std::length_error("unshare_expand exceeds node cap " + std::to_string(node_cap));
  }

  // Breadth-first from the sink; each copy gets fresh copies of its
  // original predecessors.
  Dag tree(dag.domain());
  std::vector<NodeId> original;
  std::vector<Edge> edges;
  tree.add_node(dag.type(sinks[0]));
  original.push_back(sinks[0]);
  for (std::size_t i = 0; i < original.size(); ++i) {
    for (NodeId u : dag.predecessors(original[i])) {
      const NodeId copy = tree.add_node(dag.type(u));
      original.push_back(u);
      edges.emplace_back(copy, i);
    }
  }
  for (const auto& [u, v] : edges) tree.add_edge(u, v);
  return canonicalize(tree);
}

std::string dag_key(const Dag& dag) {
  std::string key(to_string(dag.domain()));
  key += "|";
  for (std::size_t v = 0; v < dag.node_count(); ++v) {
    if (v) key += ",";
    key += std::to_string(dag.type(v));
  }
  key += "|";
  bool first = true;
  for (const auto& [u, v] : dag.edges()) {
    if (!first) key += ",";
    first = false;
    key += std::to_string(u) + ">" + std::to_string(v);
  }
  return key;
}

}  // namespace dvae::dag
