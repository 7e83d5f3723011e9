#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "tripnet/tensor.hpp"

namespace tripnet::nd {

/// Handle to a value recorded on a Tape. Only meaningful for the tape that
/// produced it.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  bool valid() const { return id != static_cast<std::size_t>(-1); }
};

enum class OpKind {
  kMatmul,
  kAdd,
  kMul,
  kSigmoid,
  kTanh,
  kSoftmax,
  kMean,
  kConcat,
  kNegate,
  kLog,
  kSum,
};

std::string_view op_name(OpKind kind);

/// Reverse-mode tape.
///
/// Every op appends one node. Leaves created with bind() alias an external
/// Tensor (no copy); when that tensor requires_grad, backward() adds the
/// gradient straight into its `grad` buffer, so repeated backward calls
/// accumulate. The tape itself is never consumed by backward().
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(Tensor t);
  Var constant(std::vector<double> v);
  Var scalar(double v);
  /// Leaf aliasing `t`. `t` must outlive the tape.
  Var bind(Tensor& t);

  /// Generic entry point; dispatches to the named op below.
  Var apply(OpKind kind, std::span<const Var> inputs, int axis = -1);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var softmax(Var a);
  Var log_softmax(Var a);
  /// Mean over `axis` (rank 1 or 2); the axis is removed from the shape.
  Var mean(Var a, int axis);
  Var concat(Var a, Var b);
  Var neg(Var a);
  Var log(Var a);
  Var sum(Var a);
  Var scale(Var a, double c);
  Var sub(Var a, Var b) { return add(a, neg(b)); }
  /// Row `i` of a rank-2 tensor (embedding lookup).
  Var row(Var m, std::size_t i);
  /// Element `i` of a tensor, as a scalar.
  Var pick(Var v, std::size_t i);

  void backward(Var loss);

  const std::vector<double>& value(Var v) const;
  const Shape& shape(Var v) const { return nodes_.at(v.id).shape; }
  double item(Var v) const;
  /// Gradient of the most recent backward() w.r.t. an interior node.
  const std::vector<double>& grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// When disabled, bind() treats every tensor as a constant and no
  /// backward closures are recorded.
  void set_grad_enabled(bool on) { grad_enabled_ = on; }
  bool grad_enabled() const { return grad_enabled_; }

 private:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    Tensor* leaf = nullptr;
    bool needs_grad = false;
    std::vector<std::size_t> inputs;
    std::function<void(Tape&, std::size_t)> backward;
  };

  Var push(Shape shape, std::vector<double> value,
           std::initializer_list<Var> inputs,
           std::function<void(Tape&, std::size_t)> backward);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }
  const std::vector<double>& val(std::size_t id) const;
  std::vector<double>& gbuf(std::size_t id);
  void check(Var v, std::string_view op) const;

  std::vector<Node> nodes_;
  bool grad_enabled_ = true;
};

}  // namespace tripnet::nd
