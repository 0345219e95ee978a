#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "dvae/ad/parameter.hpp"
#include "dvae/ad/tensor.hpp"

namespace dvae::ad {

enum class OpKind : std::uint8_t {
  constant,
  parameter,
  matmul,
  add,
  sub,
  mul,
  scale,
  concat,
  sigmoid,
  tanh,
  relu,
  softmax,
  log_softmax,
  sum,
  mean,
  slice,
  exp,
  log_sigmoid,
  clamp,
  pick,
  custom,
};

std::string_view to_string(OpKind kind);

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; only valid while the
/// tape that produced it is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Dynamic reverse-mode record. Entries are appended in evaluation order, so
/// every entry's inputs precede it and a single reverse sweep visits each
/// entry once. One tape per thread; the parameter store is only read.
class Tape {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  using CustomBackward = std::function<void(Tape&, std::size_t self)>;

  struct Node {
    OpKind kind = OpKind::constant;
    Tensor value;
    Tensor grad;
    const Tensor* external = nullptr;  // parameter leaves alias the store
    std::size_t slot = npos;
    std::vector<std::size_t> inputs;
    std::size_t arg0 = 0;
    std::size_t arg1 = 0;
    double scalar0 = 0.0;
    double scalar1 = 0.0;
    bool requires_grad = false;
    CustomBackward custom;
  };

  explicit Tape(const ParameterStore* store = nullptr) : store_(store) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  const ParameterStore* store() const { return store_; }

  Var constant(Tensor value);
  /// Leaf for a store parameter; repeated calls return the same entry.
  Var param(std::size_t slot);
  Var param(const std::string& id) { return param(store_->slot(id)); }

  /// Appends an op entry. Used by the primitive implementations and by
  /// callers that need a hand-written local derivative.
  Var record(Node node);
  Var custom(Tensor value, std::vector<Var> inputs, CustomBackward backward);

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient buffer for an entry during backward; nullptr when the entry
  /// does not lead to any parameter. Parameter leaves resolve to the sink.
  Tensor* grad(std::size_t id);

  /// Propagates d(loss)/d(entry) and adds parameter gradients into `sink`.
  /// The tape is consumed afterwards.
  void backward(Var loss, GradientSink& sink);
  bool consumed() const { return consumed_; }

 private:
  const ParameterStore* store_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> param_nodes_;
  GradientSink* sink_ = nullptr;
  bool consumed_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace dvae::ad
