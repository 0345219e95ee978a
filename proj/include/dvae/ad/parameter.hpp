#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "dvae/ad/tensor.hpp"

namespace dvae {
class Rng;
}

namespace dvae::ad {

struct Parameter {
  std::string id;
  Tensor value;
  Tensor grad;
};

/// Per-parameter gradient buffers, one tensor per store slot. Tapes write
/// into a sink so several tapes can run concurrently against one read-only
/// store; the sinks are then summed in a fixed order.
class GradientSink {
 public:
  GradientSink() = default;
  explicit GradientSink(std::vector<Tensor> grads) : grads_(std::move(grads)) {}

  Tensor& operator[](std::size_t slot) { return grads_[slot]; }
  const Tensor& operator[](std::size_t slot) const { return grads_[slot]; }
  std::size_t size() const { return grads_.size(); }

  void zero();
  /// this += other, slot by slot.
  void add(const GradientSink& other);
  void scale(double factor);

 private:
  std::vector<Tensor> grads_;
};

/// Owns every learned tensor of a model under stable string identifiers.
/// Slots are dense indices handed out in registration order.
class ParameterStore {
 public:
  std::size_t add(std::string id, Tensor value);
  /// Weight matrix initialised uniform in +-1/sqrt(fan_in), fan_in = cols.
  std::size_t add_weight(std::string id, std::size_t rows, std::size_t cols, Rng& rng);
  std::size_t add_bias(std::string id, std::size_t size);

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  Parameter& operator[](std::size_t slot) { return params_[slot]; }
  const Parameter& operator[](std::size_t slot) const { return params_[slot]; }
  std::size_t slot(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  GradientSink make_sink() const;
  void zero_grad();
  /// grad += sink, slot by slot.
  void accumulate(const GradientSink& sink);

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace dvae::ad
