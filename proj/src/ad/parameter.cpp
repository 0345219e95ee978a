#include "dvae/ad/parameter.hpp"

#include <cmath>
#include <stdexcept>

#include "dvae/core/rng.hpp"

namespace dvae::ad {

void GradientSink::zero() {
  for (auto& g : grads_) g.fill(0.0);
}

void GradientSink::add(const GradientSink& other) {
  if (other.size() != size()) throw ShapeError("gradient sinks of different layouts");
  for (std::size_t s = 0; s < grads_.size(); ++s) {
    auto dst = grads_[s].values();
    auto src = other.grads_[s].values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

void GradientSink::scale(double factor) {
  for (auto& g : grads_)
    for (double& v : g.values()) v *= factor;
}

std::size_t ParameterStore::add(std::string id, Tensor value) {
  if (index_.count(id)) throw std::invalid_argument("duplicate parameter id '" + id + "'");
  const std::size_t slot = params_.size();
  index_.emplace(id, slot);
  Tensor grad(value.shape());
  params_.push_back(Parameter{std::move(id), std::move(value), std::move(grad)});
  return slot;
}

std::size_t ParameterStore::add_weight(std::string id, std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor w(Shape{rows, cols});
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  for (double& v : w.values()) v = rng.uniform(-bound, bound);
  return add(std::move(id), std::move(w));
}

std::size_t ParameterStore::add_bias(std::string id, std::size_t size) {
  return add(std::move(id), Tensor(Shape{size}));
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::size_t ParameterStore::slot(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown parameter id '" + id + "'");
  return it->second;
}

GradientSink ParameterStore::make_sink() const {
  std::vector<Tensor> grads;
  grads.reserve(params_.size());
  for (const auto& p : params_) grads.emplace_back(p.value.shape());
  return GradientSink(std::move(grads));
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

void ParameterStore::accumulate(const GradientSink& sink) {
  if (sink.size() != params_.size()) throw ShapeError("gradient sink does not match parameter store");
  for (std::size_t s = 0; s < params_.size(); ++s) {
    auto dst = params_[s].grad.values();
    auto src = sink[s].values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

}  // namespace dvae::ad
