#include "tripnet/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace tripnet::nd {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
  if (numel(shape) != values.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " holds " +
                     std::to_string(numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
}

Tensor Tensor::zeros(Shape s) {
  const std::size_t n = numel(s);
  return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

void Tensor::enable_grad() {
  requires_grad = true;
  grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() {
  if (requires_grad) grad.assign(values.size(), 0.0);
}

}  // namespace tripnet::nd
