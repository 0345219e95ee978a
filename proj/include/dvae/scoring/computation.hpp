#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dvae/dag/dag.hpp"

namespace dvae::scoring {

inline constexpr std::uint64_t kSemanticsSeed = 0x5eed0dae;
inline constexpr std::size_t kSignalDim = 4;
inline constexpr std::size_t kProbeCount = 16;

enum class Nonlinearity { identity, tanh, leaky_relu, sine };

/// y = f(W x + b).
struct Transfer {
  std::vector<double> weight;  // dim x dim, row-major
  std::vector<double> bias;
  Nonlinearity f = Nonlinearity::identity;
};

/// Fixed signal transfer function per node type. The vocabulary's START and
/// END types are identities.
class OpSemantics {
 public:
  OpSemantics(const dag::Vocab& vocab, std::size_t dim);
  /// Seed-derived affine maps with a type-dependent nonlinearity.
  static OpSemantics from_seed(const dag::Vocab& vocab, std::uint64_t seed = kSemanticsSeed,
                               std::size_t dim = kSignalDim);

  void set(std::size_t type, Transfer t);
  std::vector<double> apply(std::size_t type, std::span<const double> x) const;
  std::size_t dim() const { return dim_; }
  std::size_t type_count() const { return transfers_.size(); }

 private:
  std::size_t dim_;
  std::vector<Transfer> transfers_;
};

/// Propagates x through the dag in topological order. Sources receive x; any
/// other node receives the elementwise mean of its predecessors' outputs.
/// Returns the single sink's output.
std::vector<double> eval_computation(const dag::Dag& dag, const OpSemantics& semantics, std::span<const double> x);

/// exp(-mean_k ||eval(dag, x_k) - t_k||^2) over fixed probes x_k, with targets
/// t_k produced by a fixed target architecture.
class ProxyOracle {
 public:
  ProxyOracle(OpSemantics semantics, std::vector<std::vector<double>> probes, const dag::Dag& target);
  /// Semantics, probes and target architecture all derived from kSemanticsSeed.
  static const ProxyOracle& standard();

  /// Score of the computation; any single-sink dag.
  double computation_score(const dag::Dag& dag) const;
  const dag::Dag& target() const { return target_; }
  const OpSemantics& semantics() const { return semantics_; }

 private:
  OpSemantics semantics_;
  std::vector<std::vector<double>> probes_;
  std::vector<std::vector<double>> targets_;
  dag::Dag target_;
};

/// Standard oracle score; 0 for dags failing the neural-arch validity rules.
double nn_proxy_score(const dag::Dag& dag);

}  // namespace dvae::scoring
