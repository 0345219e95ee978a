#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dvae/dag/vocab.hpp"

namespace dvae::dag {

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;

/// Typed directed graph with dense node ids 0..n-1. Adjacency lists stay
/// sorted. Acyclicity is not enforced on insertion; topological_sort and the
/// validity checks report cycles.
class Dag {
 public:
  Dag() = default;
  explicit Dag(Domain domain) : domain_(domain) {}

  Domain domain() const { return domain_; }
  void set_domain(Domain d) { domain_ = d; }

  NodeId add_node(std::size_t type);
  /// Returns false if the edge already exists. Self-loops and unknown
  /// endpoints throw.
  bool add_edge(NodeId from, NodeId to);
  bool has_edge(NodeId from, NodeId to) const;

  std::size_t node_count() const { return types_.size(); }
  std::size_t edge_count() const;
  std::size_t type(NodeId v) const { return types_.at(v); }
  void set_type(NodeId v, std::size_t type) { types_.at(v) = type; }
  const std::vector<std::size_t>& types() const { return types_; }

  const std::vector<NodeId>& predecessors(NodeId v) const { return preds_.at(v); }
  const std::vector<NodeId>& successors(NodeId v) const { return succs_.at(v); }
  std::size_t in_degree(NodeId v) const { return preds_.at(v).size(); }
  std::size_t out_degree(NodeId v) const { return succs_.at(v).size(); }
  /// Sorted by (from, to).
  std::vector<Edge> edges() const;

  std::vector<NodeId> sources() const;
  std::vector<NodeId> sinks() const;

  friend bool operator==(const Dag&, const Dag&) = default;

 private:
  Domain domain_ = Domain::generic;
  std::vector<std::size_t> types_;
  std::vector<std::vector<NodeId>> preds_;
  std::vector<std::vector<NodeId>> succs_;
};

class CycleError : public std::runtime_error {
 public:
  CycleError(NodeId node, const std::string& msg) : std::runtime_error(msg), node_(node) {}
  /// A node that lies on a directed cycle.
  NodeId node() const { return node_; }

 private:
  NodeId node_;
};

}  // namespace dvae::dag
