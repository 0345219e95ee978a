#pragma once

#include <string>
#include <vector>

#include "dvae/dag/dag.hpp"

namespace dvae::dag {

/// Violated rule numbers, ascending. Empty means valid.
struct ValidityReport {
  std::vector<int> violated;
  bool valid() const { return violated.empty(); }
  bool violates(int rule) const;
  std::string to_string() const;
};

/// Neural-architecture rules:
///   1 exactly one input (START-typed) node
///   2 exactly one output (END-typed) node
///   3 no node other than the input lacks predecessors
///   4 no node other than the output lacks successors
///   5 every node i > 0 has the edge (i-1, i)
///   6 acyclic
ValidityReport validity_check_nn(const Dag& dag, const Vocab& vocab);

/// Bayesian-network rules:
///   1 exactly as many nodes as the vocabulary has variables (8 for Asia)
///   2 every variable type appears exactly once
///   3 acyclic
ValidityReport validity_check_bn(const Dag& dag, const Vocab& vocab);

/// Dispatches on the dag's domain; generic dags only need to be acyclic.
ValidityReport check_domain_validity(const Dag& dag, const Vocab& vocab);

}  // namespace dvae::dag
