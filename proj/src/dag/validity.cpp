#include "dvae/dag/validity.hpp"

#include <algorithm>

#include "dvae/dag/algorithms.hpp"

namespace dvae::dag {

bool ValidityReport::violates(int rule) const {
  return std::find(violated.begin(), violated.end(), rule) != violated.end();
}

std::string ValidityReport::to_string() const {
  if (valid()) return "valid";
  std::string s = "violates rule";
  if (violated.size() > 1) s += "s";
  for (std::size_t i = 0; i < violated.size(); ++i) s += (i ? ", " : " ") + std::to_string(violated[i]);
  return s;
}

ValidityReport validity_check_nn(const Dag& dag, const Vocab& vocab) {
  ValidityReport r;
  const std::size_t n = dag.node_count();
  std::size_t inputs = 0, outputs = 0;
  for (NodeId v = 0; v < n; ++v) {
    inputs += dag.type(v) == vocab.start();
    outputs += dag.type(v) == vocab.end();
  }
  if (inputs != 1) r.violated.push_back(1);
  if (outputs != 1) r.violated.push_back(2);

  bool orphan = false, dead_end = false, broken_main_path = false;
  for (NodeId v = 0; v < n; ++v) {
    if (dag.in_degree(v) == 0 && dag.type(v) != vocab.start()) orphan = true;
    if (dag.out_degree(v) == 0 && dag.type(v) != vocab.end()) dead_end = true;
    if (v > 0 && !dag.has_edge(v - 1, v)) broken_main_path = true;
  }
  if (orphan) r.violated.push_back(3);
  if (dead_end) r.violated.push_back(4);
  if (broken_main_path) r.violated.push_back(5);
  if (!is_acyclic(dag)) r.violated.push_back(6);
  return r;
}

ValidityReport validity_check_bn(const Dag& dag, const Vocab& vocab) {
  ValidityReport r;
  const auto variables = vocab.operation_types();
  if (dag.node_count() != variables.size()) r.violated.push_back(1);
  std::vector<std::size_t> count(vocab.size(), 0);
  bool foreign = false;
  for (NodeId v = 0; v < dag.node_count(); ++v) {
    const std::size_t t = dag.type(v);
    if (t >= vocab.size() || vocab.is_virtual(t)) {
      foreign = true;
    } else {
      ++count[t];
    }
  }
  const bool each_once =
      !foreign && std::all_of(variables.begin(), variables.end(), [&](std::size_t t) { return count[t] == 1; });
  if (!each_once) r.violated.push_back(2);
  if (!is_acyclic(dag)) r.violated.push_back(3);
  return r;
}

ValidityReport check_domain_validity(const Dag& dag, const Vocab& vocab) {
  switch (dag.domain()) {
    case Domain::neural_arch: return validity_check_nn(dag, vocab);
    case Domain::bayes_net: return validity_check_bn(dag, vocab);
    case Domain::generic: break;
  }
  ValidityReport r;
  if (!is_acyclic(dag)) r.violated.push_back(1);
  return r;
}

}  // namespace dvae::dag
