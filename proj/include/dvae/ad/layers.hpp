#pragma once

#include <cstddef>
#include <string>

#include "dvae/ad/ops.hpp"
#include "dvae/ad/parameter.hpp"

namespace dvae {
class Rng;
}

namespace dvae::ad {

inline constexpr std::size_t kNoSlot = static_cast<std::size_t>(-1);

/// y = W x (+ b).
struct Linear {
  std::size_t weight = kNoSlot;
  std::size_t bias = kNoSlot;
  std::size_t in = 0;
  std::size_t out = 0;

  static Linear create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                       bool with_bias, Rng& rng);
  Var operator()(Tape& tape, Var x) const;
};

/// Gated recurrent unit, Cho et al. formulation:
///   r = sigmoid(W_r x + U_r h + b_r)
///   z = sigmoid(W_z x + U_z h + b_z)
///   n = tanh(W_n x + U_n (r * h) + b_n)
///   h' = z * h + (1 - z) * n
struct GruCell {
  Linear input;           // [W_r; W_z; W_n] with [b_r; b_z; b_n]
  std::size_t recurrent_rz = kNoSlot;  // [U_r; U_z], 2H x H
  std::size_t recurrent_n = kNoSlot;   // U_n, H x H
  std::size_t hidden = 0;

  static GruCell create(ParameterStore& store, const std::string& name, std::size_t input_size,
                        std::size_t hidden_size, Rng& rng);
  Var operator()(Tape& tape, Var x, Var h) const;
};

/// Linear -> ReLU -> Linear.
struct Mlp2 {
  Linear first;
  Linear second;

  static Mlp2 create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden,
                     std::size_t out, Rng& rng);
  Var operator()(Tape& tape, Var x) const { return second(tape, relu(first(tape, x))); }
};

}  // namespace dvae::ad
