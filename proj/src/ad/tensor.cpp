#include "dvae/ad/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace dvae::ad {

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(element_count(shape_), fill) {
  if (shape_.size() > 2) throw ShapeError("tensor rank above 2 is not supported: " + to_string(shape_));
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_.size() > 2) throw ShapeError("tensor rank above 2 is not supported: " + to_string(shape_));
  if (element_count(shape_) != values_.size()) {
    throw ShapeError("shape " + to_string(shape_) + " does not hold " + std::to_string(values_.size()) +
                     " values");
  }
}

Tensor Tensor::one_hot(std::size_t size, std::size_t hot) {
  if (hot >= size) throw ShapeError("one-hot index " + std::to_string(hot) + " out of range " + std::to_string(size));
  Tensor t(Shape{size});
  t[hot] = 1.0;
  return t;
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

double Tensor::item() const {
  if (values_.size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape_));
  return values_[0];
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace dvae::ad
