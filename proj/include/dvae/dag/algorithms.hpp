#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dvae/dag/dag.hpp"

namespace dvae {
class Rng;
}

namespace dvae::dag {

using TopoOrder = std::vector<NodeId>;

/// Kahn's algorithm, always taking the smallest ready node id. Throws
/// CycleError naming a node on a cycle.
TopoOrder topological_sort(const Dag& dag);
bool is_acyclic(const Dag& dag);
/// True if `order` is a permutation of the nodes respecting every edge.
bool is_topological_order(const Dag& dag, const TopoOrder& order);
/// Kahn's algorithm with a uniformly random ready node at each step.
TopoOrder random_topological_order(const Dag& dag, Rng& rng);

/// Adds a START-typed node feeding every source when there are several
/// sources, and an END-typed node fed by every sink when there are several
/// sinks. The new START takes id 0 (others shift up); the new END is last.
Dag ensure_single_endpoints(const Dag& dag, const Vocab& vocab);

/// Model-space form used by the encoder and decoder: the first node is the
/// unique START-typed source and the last node the unique END-typed sink
/// whose predecessors are exactly the other sinks. Adds virtual endpoints
/// unless the dag already has them, then relabels into topological order.
Dag to_model_space(const Dag& dag, const Vocab& vocab);
/// Drops a leading START-typed node and a trailing END-typed node that are
/// not part of the domain's own node set (bayes-net). Neural-arch and
/// generic dags carry their endpoints as real nodes and pass through.
Dag to_domain_space(const Dag& dag, const Vocab& vocab);

/// new id of node v is perm[v].
Dag relabel(const Dag& dag, const std::vector<NodeId>& perm);
/// Relabels so node ids follow topological_sort.
Dag canonicalize(const Dag& dag);
Dag reverse_edges(const Dag& dag);

/// Computation-tree unrolling towards the single sink: every node is copied
/// once per distinct path from it to the sink, so every non-sink node of the
/// result has out-degree 1. Throws if the result would exceed `node_cap`.
Dag unshare_expand(const Dag& dag, std::size_t node_cap = 100000);

/// Canonical identity string of the node-id-labelled graph.
std::string dag_key(const Dag& dag);

}  // namespace dvae::dag
