#include "dvae/dag/dag.hpp"

#include <algorithm>
#include <string>

namespace dvae::dag {

NodeId Dag::add_node(std::size_t type) {
  types_.push_back(type);
  preds_.emplace_back();
  succs_.emplace_back();
  return types_.size() - 1;
}

bool Dag::add_edge(NodeId from, NodeId to) {
  if (from >= node_count() || to >= node_count()) {
    throw std::out_of_range("edge (" + std::to_string(from) + "," + std::to_string(to) + ") references a node outside 0.." +
                            std::to_string(node_count()));
  }
  if (from == to) throw std::invalid_argument("self-loop on node " + std::to_string(from));
  auto& out = succs_[from];
  auto it = std::lower_bound(out.begin(), out.end(), to);
  if (it != out.end() && *it == to) return false;
  out.insert(it, to);
  auto& in = preds_[to];
  in.insert(std::lower_bound(in.begin(), in.end(), from), from);
  return true;
}

bool Dag::has_edge(NodeId from, NodeId to) const {
  if (from >= node_count() || to >= node_count()) return false;
  const auto& out = succs_[from];
  return std::binary_search(out.begin(), out.end(), to);
}

std::size_t Dag::edge_count() const {
  std::size_t n = 0;
  for (const auto& s : succs_) n += s.size();
  return n;
}

std::vector<Edge> Dag::edges() const {
  std::vector<Edge> out;
  for (NodeId u = 0; u < node_count(); ++u)
    for (NodeId v : succs_[u]) out.emplace_back(u, v);
  return out;
}

std::vector<NodeId> Dag::sources() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < node_count(); ++v)
    if (preds_[v].empty()) out.push_back(v);
  return out;
}

std::vector<NodeId> Dag::sinks() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < node_count(); ++v)
    if (succs_[v].empty()) out.push_back(v);
  return out;
}

}  // namespace dvae::dag
