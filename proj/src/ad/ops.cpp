#include "dvae/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dvae::ad {
namespace {

using Node = Tape::Node;

[[noreturn]] void shape_fail(OpKind kind, std::initializer_list<Shape> shapes, const std::string& why) {
  std::string msg = std::string(to_string(kind)) + ": " + why + " (shapes";
  for (const auto& s : shapes) msg += " " + to_string(s);
  throw ShapeError(msg + ")");
}

Tape& same_tape(OpKind kind, Var a, Var b) {
  if (!a.valid() || !b.valid()) throw std::invalid_argument(std::string(to_string(kind)) + ": invalid operand");
  if (&a.tape() != &b.tape()) throw std::invalid_argument(std::string(to_string(kind)) + ": operands on different tapes");
  return a.tape();
}

Node make(OpKind kind, Tensor value, std::initializer_list<std::size_t> inputs) {
  Node n;
  n.kind = kind;
  n.value = std::move(value);
  n.inputs.assign(inputs);
  return n;
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid_scalar(double x) {
  // log(1/(1+e^-x)) = -log1p(e^-x); use the branch that keeps exp bounded.
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// y[m] = W[m,n] x[n]. One-hot inputs are common (type encodings), so sparse
// inputs take a gather path.
void matvec(const Tensor& w, const Tensor& x, Tensor& y) {
  const std::size_t m = w.rows(), n = w.cols();
  const double* wd = w.data();
  const double* xd = x.data();
  double* yd = y.data();
  std::size_t nnz = 0;
  for (std::size_t j = 0; j < n; ++j) nnz += xd[j] != 0.0;
  if (nnz * 4 <= n) {
    std::fill(yd, yd + m, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (xd[j] == 0.0) continue;
      const double xj = xd[j];
      for (std::size_t i = 0; i < m; ++i) yd[i] += wd[i * n + j] * xj;
    }
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = wd + i * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * xd[j];
    yd[i] = acc;
  }
}

void matvec_backward(const Tensor& w, const Tensor& x, const Tensor& gy, Tensor* gw, Tensor* gx) {
  const std::size_t m = w.rows(), n = w.cols();
  const double* xd = x.data();
  const double* gyd = gy.data();
  if (gw) {
    double* gwd = gw->data();
    for (std::size_t i = 0; i < m; ++i) {
      const double g = gyd[i];
      if (g == 0.0) continue;
      double* row = gwd + i * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += g * xd[j];
    }
  }
  if (gx) {
    const double* wd = w.data();
    double* gxd = gx->data();
    for (std::size_t i = 0; i < m; ++i) {
      const double g = gyd[i];
      if (g == 0.0) continue;
      const double* row = wd + i * n;
      for (std::size_t j = 0; j < n; ++j) gxd[j] += row[j] * g;
    }
  }
}

void matmat(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.rows(), n = a.cols(), p = b.cols();
  c.fill(0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < p; ++j) c.at(i, j) += aik * b.at(k, j);
    }
}

template <class F>
Var unary(OpKind kind, Var a, F&& f) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return a.tape().record(make(kind, std::move(y), {a.id()}));
}

void require_vector(OpKind kind, const Tensor& t) {
  if (t.rank() != 1) shape_fail(kind, {t.shape()}, "expects a vector");
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(OpKind::matmul, a, b);
  const Tensor& w = a.value();
  const Tensor& x = b.value();
  if (w.rank() != 2) shape_fail(OpKind::matmul, {w.shape(), x.shape()}, "left operand must be a matrix");
  if (x.rank() == 1) {
    if (w.cols() != x.size()) shape_fail(OpKind::matmul, {w.shape(), x.shape()}, "inner dimensions differ");
    Tensor y(Shape{w.rows()});
    matvec(w, x, y);
    return tape.record(make(OpKind::matmul, std::move(y), {a.id(), b.id()}));
  }
  if (x.rank() != 2 || w.cols() != x.rows()) shape_fail(OpKind::matmul, {w.shape(), x.shape()}, "inner dimensions differ");
  Tensor c(Shape{w.rows(), x.cols()});
  matmat(w, x, c);
  return tape.record(make(OpKind::matmul, std::move(c), {a.id(), b.id()}));
}

namespace {
template <class F>
Var binary(OpKind kind, Var a, Var b, F&& f) {
  Tape& tape = same_tape(kind, a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.shape() != y.shape()) shape_fail(kind, {x.shape(), y.shape()}, "operand shapes differ");
  Tensor z(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = f(x[i], y[i]);
  return tape.record(make(kind, std::move(z), {a.id(), b.id()}));
}
}  // namespace

Var add(Var a, Var b) { return binary(OpKind::add, a, b, [](double x, double y) { return x + y; }); }
Var sub(Var a, Var b) { return binary(OpKind::sub, a, b, [](double x, double y) { return x - y; }); }
Var mul(Var a, Var b) { return binary(OpKind::mul, a, b, [](double x, double y) { return x * y; }); }

Var scale(Var a, double factor) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * factor;
  Node n = make(OpKind::scale, std::move(y), {a.id()});
  n.scalar0 = factor;
  return a.tape().record(std::move(n));
}

Var concat(Var a, Var b) {
  Tape& tape = same_tape(OpKind::concat, a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rank() != 1 || y.rank() != 1) shape_fail(OpKind::concat, {x.shape(), y.shape()}, "expects two vectors");
  std::vector<double> v(x.values().begin(), x.values().end());
  v.insert(v.end(), y.values().begin(), y.values().end());
  return tape.record(make(OpKind::concat, Tensor::vector(std::move(v)), {a.id(), b.id()}));
}

Var sigmoid(Var a) { return unary(OpKind::sigmoid, a, sigmoid_scalar); }
Var tanh(Var a) { return unary(OpKind::tanh, a, [](double x) { return std::tanh(x); }); }
Var relu(Var a) { return unary(OpKind::relu, a, [](double x) { return x > 0.0 ? x : 0.0; }); }
Var exp(Var a) { return unary(OpKind::exp, a, [](double x) { return std::exp(x); }); }
Var log_sigmoid(Var a) { return unary(OpKind::log_sigmoid, a, log_sigmoid_scalar); }

Var clamp(Var a, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lower bound above upper bound");
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::clamp(x[i], lo, hi);
  Node n = make(OpKind::clamp, std::move(y), {a.id()});
  n.scalar0 = lo;
  n.scalar1 = hi;
  return a.tape().record(std::move(n));
}

Var softmax(Var a) {
  const Tensor& x = a.value();
  require_vector(OpKind::softmax, x);
  if (x.size() == 0) shape_fail(OpKind::softmax, {x.shape()}, "empty vector");
  const double mx = *std::max_element(x.values().begin(), x.values().end());
  Tensor y(x.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += (y[i] = std::exp(x[i] - mx));
  for (double& v : y.values()) v /= total;
  return a.tape().record(make(OpKind::softmax, std::move(y), {a.id()}));
}

Var log_softmax(Var a) {
  const Tensor& x = a.value();
  require_vector(OpKind::log_softmax, x);
  if (x.size() == 0) shape_fail(OpKind::log_softmax, {x.shape()}, "empty vector");
  const double mx = *std::max_element(x.values().begin(), x.values().end());
  double total = 0.0;
  for (double v : x.values()) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - lse;
  return a.tape().record(make(OpKind::log_softmax, std::move(y), {a.id()}));
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape().record(make(OpKind::sum, Tensor::scalar(s), {a.id()}));
}

Var mean(Var a) {
  const Tensor& x = a.value();
  if (x.size() == 0) shape_fail(OpKind::mean, {x.shape()}, "empty tensor");
  double s = 0.0;
  for (double v : x.values()) s += v;
  return a.tape().record(make(OpKind::mean, Tensor::scalar(s / static_cast<double>(x.size())), {a.id()}));
}

Var slice(Var a, std::size_t begin, std::size_t end) {
  const Tensor& x = a.value();
  require_vector(OpKind::slice, x);
  if (begin > end || end > x.size()) {
    shape_fail(OpKind::slice, {x.shape()},
               "range [" + std::to_string(begin) + "," + std::to_string(end) + ") out of bounds");
  }
  std::vector<double> v(x.values().begin() + begin, x.values().begin() + end);
  Node n = make(OpKind::slice, Tensor::vector(std::move(v)), {a.id()});
  n.arg0 = begin;
  n.arg1 = end;
  return a.tape().record(std::move(n));
}

Var pick(Var a, std::size_t index) {
  const Tensor& x = a.value();
  require_vector(OpKind::pick, x);
  if (index >= x.size()) shape_fail(OpKind::pick, {x.shape()}, "index " + std::to_string(index) + " out of bounds");
  Node n = make(OpKind::pick, Tensor::scalar(x[index]), {a.id()});
  n.arg0 = index;
  return a.tape().record(std::move(n));
}

Var forward_primitive(OpKind kind, std::span<const Var> in, double arg0, double arg1) {
  auto need = [&](std::size_t k) {
    if (in.size() != k) {
      throw std::invalid_argument(std::string(to_string(kind)) + ": expects " + std::to_string(k) + " operand(s), got " +
                                  std::to_string(in.size()));
    }
  };
  switch (kind) {
    case OpKind::matmul: need(2); return matmul(in[0], in[1]);
    case OpKind::add: need(2); return add(in[0], in[1]);
    case OpKind::sub: need(2); return sub(in[0], in[1]);
    case OpKind::mul: need(2); return mul(in[0], in[1]);
    case OpKind::concat: need(2); return concat(in[0], in[1]);
    case OpKind::scale: need(1); return scale(in[0], arg0);
    case OpKind::sigmoid: need(1); return sigmoid(in[0]);
    case OpKind::tanh: need(1); return tanh(in[0]);
    case OpKind::relu: need(1); return relu(in[0]);
    case OpKind::softmax: need(1); return softmax(in[0]);
    case OpKind::log_softmax: need(1); return log_softmax(in[0]);
    case OpKind::sum: need(1); return sum(in[0]);
    case OpKind::mean: need(1); return mean(in[0]);
    case OpKind::slice: need(1); return slice(in[0], static_cast<std::size_t>(arg0), static_cast<std::size_t>(arg1));
    case OpKind::exp: need(1); return exp(in[0]);
    case OpKind::log_sigmoid: need(1); return log_sigmoid(in[0]);
    case OpKind::clamp: need(1); return clamp(in[0], arg0, arg1);
    case OpKind::pick: need(1); return pick(in[0], static_cast<std::size_t>(arg0));
    default: throw std::invalid_argument(std::string(to_string(kind)) + " is not a forward primitive");
  }
}

namespace detail {

void backward_node(Tape& tape, std::size_t id) {
  const Node& n = tape.node(id);
  const Tensor& gy = n.grad;
  const Tensor& y = n.value;
  auto input = [&](std::size_t k) -> const Tensor& { return tape.value(n.inputs[k]); };
  auto grad_of = [&](std::size_t k) { return tape.grad(n.inputs[k]); };

  switch (n.kind) {
    case OpKind::matmul: {
      const Tensor& a = input(0);
      const Tensor& b = input(1);
      Tensor* ga = grad_of(0);
      Tensor* gb = grad_of(1);
      if (b.rank() == 1) {
        matvec_backward(a, b, gy, ga, gb);
        return;
      }
      const std::size_t m = a.rows(), k = a.cols(), p = b.cols();
      if (ga)
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < p; ++j) {
            const double g = gy.at(i, j);
            for (std::size_t t = 0; t < k; ++t) ga->at(i, t) += g * b.at(t, j);
          }
      if (gb)
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t t = 0; t < k; ++t) {
            const double av = a.at(i, t);
            for (std::size_t j = 0; j < p; ++j) gb->at(t, j) += av * gy.at(i, j);
          }
      return;
    }
    case OpKind::add:
    case OpKind::sub: {
      const double sign = n.kind == OpKind::add ? 1.0 : -1.0;
      if (Tensor* ga = grad_of(0))
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
      if (Tensor* gb = grad_of(1))
        for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += sign * gy[i];
      return;
    }
    case OpKind::mul: {
      const Tensor& a = input(0);
      const Tensor& b = input(1);
      if (Tensor* ga = grad_of(0))
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * b[i];
      if (Tensor* gb = grad_of(1))
        for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i] * a[i];
      return;
    }
    case OpKind::scale: {
      if (Tensor* ga = grad_of(0))
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * n.scalar0;
      return;
    }
    case OpKind::concat: {
      const std::size_t na = input(0).size();
      if (Tensor* ga = grad_of(0))
        for (std::size_t i = 0; i < na; ++i) (*ga)[i] += gy[i];
      if (Tensor* gb = grad_of(1))
        for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += gy[na + i];
      return;
    }
    case OpKind::sigmoid: {
      if (Tensor* ga = grad_of(0))
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * y[i] * (1.0 - y[i]);
      return;
    }
    case OpKind::tanh: {
      if (Tensor* ga = grad_of(0))
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * (1.0 - y[i] * y[i]);
      return;
    }
    case OpKind::relu: {
      const Tensor& x = input(0);
      if (Tensor* ga = grad_of(0))
        for (std::size_t i = 0; i < gy.size(); ++i)
          if (x[i] > 0.0) (*ga)[i] += gy[i];
      return;
    }
    case OpKind::exp: {
      if (Tensor* ga = grad_of(0))
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * y[i];
      return;
    }
    case OpKind::log_sigmoid: {
      const Tensor& x = input(0);
      if (Tensor* ga = grad_of(0))
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * sigmoid_scalar(-x[i]);
      return;
    }
    case OpKind::clamp: {
      const Tensor& x = input(0);
      if (Tensor* ga = grad_of(0))
        for (std::size_t i = 0; i < gy.size(); ++i)
          if (x[i] > n.scalar0 && x[i] < n.scalar1) (*ga)[i] += gy[i];
      return;
    }
    case OpKind::softmax: {
      if (Tensor* ga = grad_of(0)) {
        double dot = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) dot += gy[i] * y[i];
        for (std::size_t i = 0; i < y.size(); ++i) (*ga)[i] += y[i] * (gy[i] - dot);
      }
      return;
    }
    case OpKind::log_softmax: {
      if (Tensor* ga = grad_of(0)) {
        double total = 0.0;
        for (double g : gy.values()) total += g;
        for (std::size_t i = 0; i < y.size(); ++i) (*ga)[i] += gy[i] - std::exp(y[i]) * total;
      }
      return;
    }
    case OpKind::sum:
    case OpKind::mean: {
      if (Tensor* ga = grad_of(0)) {
        const double g = n.kind == OpKind::sum ? gy[0] : gy[0] / static_cast<double>(ga->size());
        for (double& v : ga->values()) v += g;
      }
      return;
    }
    case OpKind::slice: {
      if (Tensor* ga = grad_of(0))
        for (std::size_t i = n.arg0; i < n.arg1; ++i) (*ga)[i] += gy[i - n.arg0];
      return;
    }
    case OpKind::pick: {
      if (Tensor* ga = grad_of(0)) (*ga)[n.arg0] += gy[0];
      return;
    }
    case OpKind::custom: {
      n.custom(tape, id);
      return;
    }
    case OpKind::constant:
    case OpKind::parameter:
      return;
  }
}

}  // namespace detail
}  // namespace dvae::ad
