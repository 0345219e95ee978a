#include "dvae/ad/tape.hpp"

#include <stdexcept>

#include "dvae/ad/ops.hpp"

namespace dvae::ad {

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::constant: return "constant";
    case OpKind::parameter: return "parameter";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "elementwise-mul";
    case OpKind::scale: return "scale";
    case OpKind::concat: return "concat";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::tanh: return "tanh";
    case OpKind::relu: return "relu";
    case OpKind::softmax: return "softmax";
    case OpKind::log_softmax: return "log-softmax";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::slice: return "slice";
    case OpKind::exp: return "exp";
    case OpKind::log_sigmoid: return "log-sigmoid";
    case OpKind::clamp: return "clamp";
    case OpKind::pick: return "pick";
    case OpKind::custom: return "custom";
  }
  return "unknown";
}

Var Tape::constant(Tensor value) {
  Node n;
  n.kind = OpKind::constant;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(std::size_t slot) {
  if (!store_) throw std::logic_error("tape has no parameter store");
  if (slot >= store_->size()) throw std::out_of_range("parameter slot out of range");
  if (param_nodes_.size() < store_->size()) param_nodes_.resize(store_->size(), npos);
  if (param_nodes_[slot] != npos) return Var(this, param_nodes_[slot]);
  Node n;
  n.kind = OpKind::parameter;
  n.external = &(*store_)[slot].value;
  n.slot = slot;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  param_nodes_[slot] = nodes_.size() - 1;
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Node node) {
  if (consumed_) throw std::logic_error("recording on a consumed tape");
  bool rg = false;
  for (auto in : node.inputs) rg = rg || nodes_[in].requires_grad;
  node.requires_grad = rg;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::custom(Tensor value, std::vector<Var> inputs, CustomBackward backward) {
  Node n;
  n.kind = OpKind::custom;
  n.value = std::move(value);
  for (const auto& v : inputs) n.inputs.push_back(v.id());
  n.custom = std::move(backward);
  return record(std::move(n));
}

Tensor* Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (n.kind == OpKind::parameter) return &(*sink_)[n.slot];
  if (n.grad.size() != value(id).size() || n.grad.shape() != value(id).shape()) n.grad = Tensor(value(id).shape());
  return &n.grad;
}

void Tape::backward(Var loss, GradientSink& sink) {
  if (consumed_) throw std::logic_error("backward called twice on the same tape");
  if (&loss.tape() != this) throw std::invalid_argument("loss was recorded on a different tape");
  if (!value(loss.id()).is_scalar()) {
    throw ShapeError("backward needs a scalar loss, got shape " + to_string(value(loss.id()).shape()));
  }
  if (store_ && sink.size() != store_->size()) throw ShapeError("gradient sink does not match parameter store");
  sink_ = &sink;
  consumed_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  if (Tensor* g = grad(loss.id())) (*g)[0] += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.kind == OpKind::parameter || n.kind == OpKind::constant) continue;
    if (n.grad.empty()) continue;  // never reached from the loss
    detail::backward_node(*this, i);
  }
  sink_ = nullptr;
}

}  // namespace dvae::ad
