#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tripnet::nd {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Raised when operand shapes do not conform to an operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major tensor of doubles. A rank-0 shape is a scalar.
///
/// `grad` is allocated by enable_grad() and always has the same length as
/// `values`. Backward passes add into it; nothing clears it except
/// zero_grad() or an optimizer step.
struct Tensor {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> v);

  static Tensor zeros(Shape s);
  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  bool has_grad() const { return requires_grad && grad.size() == values.size(); }

  void enable_grad();
  void zero_grad();

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

}  // namespace tripnet::nd
