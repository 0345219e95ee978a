#pragma once

#include <cstddef>
#include <span>

#include "dvae/ad/tape.hpp"

namespace dvae::ad {

// Primitives. All shape checks throw ShapeError naming the op and shapes.
// There is no broadcasting: elementwise ops need identical shapes.

/// [m,n]x[n] -> [m] or [m,n]x[n,p] -> [m,p].
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Joins two vectors end to end.
Var concat(Var a, Var b);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
/// Over a vector.
Var softmax(Var a);
Var log_softmax(Var a);
/// Reduces to a scalar.
Var sum(Var a);
Var mean(Var a);
/// Elements [begin, end) of a vector.
Var slice(Var a, std::size_t begin, std::size_t end);
Var exp(Var a);
/// log(sigmoid(x)) evaluated without overflow.
Var log_sigmoid(Var a);
/// Elementwise clamp; derivative is zero where the bound is active.
Var clamp(Var a, double lo, double hi);
/// Scalar element `index` of a vector.
Var pick(Var a, std::size_t index);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

/// Generic entry point used by the property tests: dispatches on the kind.
/// `arg0`/`arg1` carry slice bounds, the pick index, or (as doubles) the
/// scale factor and clamp bounds.
Var forward_primitive(OpKind kind, std::span<const Var> inputs, double arg0 = 0.0, double arg1 = 0.0);

namespace detail {
void backward_node(Tape& tape, std::size_t id);
}

}  // namespace dvae::ad
