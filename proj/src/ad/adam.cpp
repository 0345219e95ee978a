#include "dvae/ad/adam.hpp"

#include <cmath>

namespace dvae::ad {

AdamState AdamState::for_store(const ParameterStore& store, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const auto& p : store) {
    s.first_moment.emplace_back(p.value.shape());
    s.second_moment.emplace_back(p.value.shape());
  }
  return s;
}

void adam_step(AdamState& state, ParameterStore& store) {
  if (state.first_moment.size() != store.size()) throw ShapeError("adam state does not match parameter store");
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t s = 0; s < store.size(); ++s) {
    Parameter& p = store[s];
    Tensor& m = state.first_moment[s];
    Tensor& v = state.second_moment[s];
    if (m.shape() != p.value.shape()) throw ShapeError("adam moment shape differs for '" + p.id + "'");
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
    p.grad.fill(0.0);
  }
}

}  // namespace dvae::ad
