#pragma once

#include <cstdint>
#include <vector>

#include "dvae/ad/parameter.hpp"

namespace dvae::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;

  static AdamState for_store(const ParameterStore& store, AdamConfig config = {});
};

/// Bias-corrected Adam update from the store's accumulated gradients, then
/// zeroes those gradients.
void adam_step(AdamState& state, ParameterStore& store);

}  // namespace dvae::ad
