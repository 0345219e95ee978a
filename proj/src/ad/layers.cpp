#include "dvae/ad/layers.hpp"

#include "dvae/core/rng.hpp"

namespace dvae::ad {

Linear Linear::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                      bool with_bias, Rng& rng) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = store.add_weight(name + ".weight", out, in, rng);
  if (with_bias) l.bias = store.add_bias(name + ".bias", out);
  return l;
}

Var Linear::operator()(Tape& tape, Var x) const {
  Var y = matmul(tape.param(weight), x);
  return bias == kNoSlot ? y : add(y, tape.param(bias));
}

GruCell GruCell::create(ParameterStore& store, const std::string& name, std::size_t input_size,
                        std::size_t hidden_size, Rng& rng) {
  GruCell g;
  g.hidden = hidden_size;
  g.input = Linear::create(store, name + ".input", input_size, 3 * hidden_size, true, rng);
  g.recurrent_rz = store.add_weight(name + ".recurrent_rz", 2 * hidden_size, hidden_size, rng);
  g.recurrent_n = store.add_weight(name + ".recurrent_n", hidden_size, hidden_size, rng);
  return g;
}

Var GruCell::operator()(Tape& tape, Var x, Var h) const {
  const std::size_t H = hidden;
  Var gx = input(tape, x);
  Var gh = matmul(tape.param(recurrent_rz), h);
  Var r = sigmoid(add(slice(gx, 0, H), slice(gh, 0, H)));
  Var z = sigmoid(add(slice(gx, H, 2 * H), slice(gh, H, 2 * H)));
  Var n = tanh(add(slice(gx, 2 * H, 3 * H), matmul(tape.param(recurrent_n), mul(r, h))));
  return add(n, mul(z, sub(h, n)));
}

Mlp2 Mlp2::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden,
                  std::size_t out, Rng& rng) {
  Mlp2 m;
  m.first = Linear::create(store, name + ".0", in, hidden, true, rng);
  m.second = Linear::create(store, name + ".1", hidden, out, true, rng);
  return m;
}

}  // namespace dvae::ad
