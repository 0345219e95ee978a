#pragma once

#include <cstddef>

#include "dvae/dag/dag.hpp"

namespace dvae {
class Rng;
}

namespace dvae::dag {

inline constexpr double kDefaultSkipProb = 0.4;

/// Input node, `layers` operation nodes with uniformly drawn types, output
/// node. Every node i > 0 gets the main-path edge (i-1, i); every earlier
/// non-adjacent node (input included) feeds an operation node with
/// probability `skip_prob`. The output is fed by the last layer only, so the
/// output's predecessors are exactly the loose ends.
Dag random_nn_dag(Rng& rng, std::size_t layers, const Vocab& vocab, double skip_prob = kDefaultSkipProb);

/// 2 / (k - 1).
double default_bn_edge_prob(std::size_t k);

/// One node per vocabulary variable, node i typed as variable i; each pair
/// i < j gets the edge (i, j) with probability `edge_prob`.
Dag random_bn_dag(Rng& rng, const Vocab& vocab, double edge_prob);

/// Random generic dag over `n` inner nodes with forward edges of
/// probability `edge_prob`, wrapped with a START source and an END sink so
/// it has a single source and single sink. Inner types are uniform over the
/// non-virtual vocabulary types.
Dag random_generic_dag(Rng& rng, std::size_t n, const Vocab& vocab, double edge_prob);

}  // namespace dvae::dag
