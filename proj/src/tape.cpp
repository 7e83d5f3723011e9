#include "tripnet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tripnet::nd {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

[[noreturn]] void mismatch(std::string_view op, const Shape& a,
                           const Shape& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) +
                   " vs " + shape_str(b));
}

std::size_t last_dim(const Shape& s) { return s.empty() ? 1 : s.back(); }

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kMean: return "mean";
    case OpKind::kConcat: return "concat";
    case OpKind::kNegate: return "negate";
    case OpKind::kLog: return "log";
    case OpKind::kSum: return "sum";
  }
  return "?";
}

const std::vector<double>& Tape::val(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.leaf ? n.leaf->values : n.value;
}

std::vector<double>& Tape::gbuf(std::size_t id) {
  Node& n = nodes_[id];
  return n.leaf ? n.leaf->grad : n.grad;
}

void Tape::check(Var v, std::string_view op) const {
  if (!v.valid() || v.id >= nodes_.size()) {
    throw std::invalid_argument(std::string(op) + ": invalid tape handle");
  }
}

const std::vector<double>& Tape::value(Var v) const {
  check(v, "value");
  return val(v.id);
}

double Tape::item(Var v) const {
  const auto& x = value(v);
  if (x.size() != 1) {
    throw ShapeError("item: expected one element, shape " +
                     shape_str(shape(v)));
  }
  return x[0];
}

const std::vector<double>& Tape::grad(Var v) const {
  check(v, "grad");
  const Node& n = nodes_[v.id];
  return n.leaf ? n.leaf->grad : n.grad;
}

Var Tape::push(Shape shape, std::vector<double> value,
               std::initializer_list<Var> inputs,
               std::function<void(Tape&, std::size_t)> backward) {
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(value);
  for (Var in : inputs) {
    n.inputs.push_back(in.id);
    n.needs_grad = n.needs_grad || nodes_[in.id].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor t) {
  Node n;
  n.shape = std::move(t.shape);
  n.value = std::move(t.values);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(std::vector<double> v) {
  return constant(Tensor::vector(std::move(v)));
}

Var Tape::scalar(double v) { return constant(Tensor::scalar(v)); }

Var Tape::bind(Tensor& t) {
  Node n;
  n.shape = t.shape;
  n.leaf = &t;
  n.needs_grad = grad_enabled_ && t.requires_grad;
  if (n.needs_grad && t.grad.size() != t.values.size()) {
    t.grad.assign(t.values.size(), 0.0);
  }
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::apply(OpKind kind, std::span<const Var> in, int axis) {
  auto want = [&](std::size_t n) {
    if (in.size() != n) {
      throw std::invalid_argument(std::string(op_name(kind)) + ": expected " +
                                  std::to_string(n) + " inputs, got " +
                                  std::to_string(in.size()));
    }
  };
  switch (kind) {
    case OpKind::kMatmul: want(2); return matmul(in[0], in[1]);
    case OpKind::kAdd: want(2); return add(in[0], in[1]);
    case OpKind::kMul: want(2); return mul(in[0], in[1]);
    case OpKind::kSigmoid: want(1); return sigmoid(in[0]);
    case OpKind::kTanh: want(1); return tanh(in[0]);
    case OpKind::kSoftmax: want(1); return softmax(in[0]);
    case OpKind::kMean: want(1); return mean(in[0], axis < 0 ? 0 : axis);
    case OpKind::kConcat: want(2); return concat(in[0], in[1]);
    case OpKind::kNegate: want(1); return neg(in[0]);
    case OpKind::kLog: want(1); return log(in[0]);
    case OpKind::kSum: want(1); return sum(in[0]);
  }
  throw std::invalid_argument("apply: unknown op");
}

Var Tape::matmul(Var a, Var b) {
  check(a, "matmul");
  check(b, "matmul");
  const Shape& sa = nodes_[a.id].shape;
  const Shape& sb = nodes_[b.id].shape;
  if (sa.empty() || sb.empty() || sa.size() > 2 || sb.size() > 2) {
    mismatch("matmul", sa, sb);
  }
  const std::size_t m = sa.size() == 2 ? sa[0] : 1;
  const std::size_t k = sa.back();
  const std::size_t kb = sb[0];
  const std::size_t n = sb.size() == 2 ? sb[1] : 1;
  if (k != kb) mismatch("matmul", sa, sb);

  Shape out_shape;
  if (sa.size() == 2) out_shape.push_back(m);
  if (sb.size() == 2) out_shape.push_back(n);

  const auto& A = val(a.id);
  const auto& B = val(b.id);
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* o = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += aip * brow[j];
    }
  }
  return push(std::move(out_shape), std::move(out), {a, b},
              [a, b, m, k, n](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                const auto& A = t.val(a.id);
                const auto& B = t.val(b.id);
                if (t.needs(a)) {
                  auto& ga = t.gbuf(a.id);
                  for (std::size_t i = 0; i < m; ++i) {
                    const double* gi = g.data() + i * n;
                    for (std::size_t p = 0; p < k; ++p) {
                      const double* brow = B.data() + p * n;
                      double acc = 0.0;
                      for (std::size_t j = 0; j < n; ++j) acc += gi[j] * brow[j];
                      ga[i * k + p] += acc;
                    }
                  }
                }
                if (t.needs(b)) {
                  auto& gb = t.gbuf(b.id);
                  for (std::size_t i = 0; i < m; ++i) {
                    const double* gi = g.data() + i * n;
                    for (std::size_t p = 0; p < k; ++p) {
                      const double aip = A[i * k + p];
                      if (aip == 0.0) continue;
                      double* gbrow = gb.data() + p * n;
                      for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * gi[j];
                    }
                  }
                }
              });
}

Var Tape::add(Var a, Var b) {
  check(a, "add");
  check(b, "add");
  const Shape& sa = nodes_[a.id].shape;
  if (sa != nodes_[b.id].shape) mismatch("add", sa, nodes_[b.id].shape);
  const auto& A = val(a.id);
  const auto& B = val(b.id);
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + B[i];
  return push(sa, std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    for (Var in : {a, b}) {
      if (!t.needs(in)) continue;
      auto& gi = t.gbuf(in.id);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  check(a, "mul");
  check(b, "mul");
  const Shape& sa = nodes_[a.id].shape;
  if (sa != nodes_[b.id].shape) mismatch("mul", sa, nodes_[b.id].shape);
  const auto& A = val(a.id);
  const auto& B = val(b.id);
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  return push(sa, std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& A = t.val(a.id);
    const auto& B = t.val(b.id);
    if (t.needs(a)) {
      auto& ga = t.gbuf(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (t.needs(b)) {
      auto& gb = t.gbuf(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

Var Tape::sigmoid(Var a) {
  check(a, "sigmoid");
  const auto& A = val(a.id);
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(A[i]);
  return push(nodes_[a.id].shape, std::move(out), {a},
              [a](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                const auto& y = t.nodes_[self].value;
                auto& ga = t.gbuf(a.id);
                for (std::size_t i = 0; i < g.size(); ++i) {
                  ga[i] += g[i] * y[i] * (1.0 - y[i]);
                }
              });
}

Var Tape::tanh(Var a) {
  check(a, "tanh");
  const auto& A = val(a.id);
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(A[i]);
  return push(nodes_[a.id].shape, std::move(out), {a},
              [a](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                const auto& y = t.nodes_[self].value;
                auto& ga = t.gbuf(a.id);
                for (std::size_t i = 0; i < g.size(); ++i) {
                  ga[i] += g[i] * (1.0 - y[i] * y[i]);
                }
              });
}

Var Tape::softmax(Var a) {
  check(a, "softmax");
  const Shape& s = nodes_[a.id].shape;
  const auto& A = val(a.id);
  const std::size_t cols = last_dim(s);
  if (cols == 0) throw ShapeError("softmax: empty last axis");
  const std::size_t rows = A.size() / cols;
  std::vector<double> out(A.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = A.data() + r * cols;
    double* y = out.data() + r * cols;
    const double mx = *std::max_element(x, x + cols);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < cols; ++j) y[j] /= z;
  }
  return push(s, std::move(out), {a}, [a, rows, cols](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& y = t.nodes_[self].value;
    auto& ga = t.gbuf(a.id);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += g[o + j] * y[o + j];
      for (std::size_t j = 0; j < cols; ++j) {
        ga[o + j] += y[o + j] * (g[o + j] - dot);
      }
    }
  });
}

Var Tape::log_softmax(Var a) {
  check(a, "log_softmax");
  const Shape& s = nodes_[a.id].shape;
  const auto& A = val(a.id);
  const std::size_t cols = last_dim(s);
  if (cols == 0) throw ShapeError("log_softmax: empty last axis");
  const std::size_t rows = A.size() / cols;
  std::vector<double> out(A.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = A.data() + r * cols;
    double* y = out.data() + r * cols;
    const double mx = *std::max_element(x, x + cols);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += std::exp(x[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < cols; ++j) y[j] = x[j] - lse;
  }
  return push(s, std::move(out), {a}, [a, rows, cols](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& y = t.nodes_[self].value;
    auto& ga = t.gbuf(a.id);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * cols;
      double gs = 0.0;
      for (std::size_t j = 0; j < cols; ++j) gs += g[o + j];
      for (std::size_t j = 0; j < cols; ++j) {
        ga[o + j] += g[o + j] - std::exp(y[o + j]) * gs;
      }
    }
  });
}

Var Tape::mean(Var a, int axis) {
  check(a, "mean");
  const Shape& s = nodes_[a.id].shape;
  const auto& A = val(a.id);
  if (s.size() == 1 && axis == 0) {
    const std::size_t n = s[0];
    if (n == 0) throw ShapeError("mean: empty axis");
    double acc = 0.0;
    for (double x : A) acc += x;
    return push({}, {acc / static_cast<double>(n)}, {a},
                [a, n](Tape& t, std::size_t self) {
                  const double g = t.nodes_[self].grad[0] / static_cast<double>(n);
                  for (double& gi : t.gbuf(a.id)) gi += g;
                });
  }
  if (s.size() != 2 || (axis != 0 && axis != 1)) {
    throw ShapeError("mean: unsupported axis " + std::to_string(axis) +
                     " for shape " + shape_str(s));
  }
  const std::size_t rows = s[0], cols = s[1];
  if ((axis == 0 ? rows : cols) == 0) throw ShapeError("mean: empty axis");
  if (axis == 0) {
    std::vector<double> out(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) out[c] += A[r * cols + c];
    }
    for (double& x : out) x /= static_cast<double>(rows);
    return push({cols}, std::move(out), {a},
                [a, rows, cols](Tape& t, std::size_t self) {
                  const auto& g = t.nodes_[self].grad;
                  auto& ga = t.gbuf(a.id);
                  const double inv = 1.0 / static_cast<double>(rows);
                  for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < cols; ++c) {
                      ga[r * cols + c] += g[c] * inv;
                    }
                  }
                });
  }
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r] += A[r * cols + c];
    out[r] /= static_cast<double>(cols);
  }
  return push({rows}, std::move(out), {a},
              [a, rows, cols](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                auto& ga = t.gbuf(a.id);
                const double inv = 1.0 / static_cast<double>(cols);
                for (std::size_t r = 0; r < rows; ++r) {
                  for (std::size_t c = 0; c < cols; ++c) {
                    ga[r * cols + c] += g[r] * inv;
                  }
                }
              });
}

Var Tape::concat(Var a, Var b) {
  check(a, "concat");
  check(b, "concat");
  const Shape& sa = nodes_[a.id].shape;
  const Shape& sb = nodes_[b.id].shape;
  if (sa.empty() || sa.size() != sb.size() || sa.size() > 2 ||
      (sa.size() == 2 && sa[0] != sb[0])) {
    mismatch("concat", sa, sb);
  }
  const std::size_t rows = sa.size() == 2 ? sa[0] : 1;
  const std::size_t ca = sa.back(), cb = sb.back();
  const auto& A = val(a.id);
  const auto& B = val(b.id);
  std::vector<double> out;
  out.reserve(A.size() + B.size());
  for (std::size_t r = 0; r < rows; ++r) {
    out.insert(out.end(), A.begin() + r * ca, A.begin() + (r + 1) * ca);
    out.insert(out.end(), B.begin() + r * cb, B.begin() + (r + 1) * cb);
  }
  Shape s = sa;
  s.back() = ca + cb;
  return push(std::move(s), std::move(out), {a, b},
              [a, b, rows, ca, cb](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                const std::size_t w = ca + cb;
                if (t.needs(a)) {
                  auto& ga = t.gbuf(a.id);
                  for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < ca; ++c) ga[r * ca + c] += g[r * w + c];
                  }
                }
                if (t.needs(b)) {
                  auto& gb = t.gbuf(b.id);
                  for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < cb; ++c) {
                      gb[r * cb + c] += g[r * w + ca + c];
                    }
                  }
                }
              });
}

Var Tape::neg(Var a) { return scale(a, -1.0); }

Var Tape::scale(Var a, double c) {
  check(a, "scale");
  const auto& A = val(a.id);
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * A[i];
  return push(nodes_[a.id].shape, std::move(out), {a},
              [a, c](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                auto& ga = t.gbuf(a.id);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
              });
}

Var Tape::log(Var a) {
  check(a, "log");
  const auto& A = val(a.id);
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(A[i]);
  return push(nodes_[a.id].shape, std::move(out), {a},
              [a](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                const auto& A = t.val(a.id);
                auto& ga = t.gbuf(a.id);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / A[i];
              });
}

Var Tape::sum(Var a) {
  check(a, "sum");
  const auto& A = val(a.id);
  double acc = 0.0;
  for (double x : A) acc += x;
  return push({}, {acc}, {a}, [a](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad[0];
    for (double& gi : t.gbuf(a.id)) gi += g;
  });
}

Var Tape::row(Var m, std::size_t i) {
  check(m, "row");
  const Shape& s = nodes_[m.id].shape;
  if (s.size() != 2 || i >= s[0]) {
    throw ShapeError("row: index " + std::to_string(i) + " out of range for " +
                     shape_str(s));
  }
  const std::size_t cols = s[1];
  const auto& M = val(m.id);
  std::vector<double> out(M.begin() + i * cols, M.begin() + (i + 1) * cols);
  return push({cols}, std::move(out), {m}, [m, i, cols](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    auto& gm = t.gbuf(m.id);
    for (std::size_t c = 0; c < cols; ++c) gm[i * cols + c] += g[c];
  });
}

Var Tape::pick(Var v, std::size_t i) {
  check(v, "pick");
  const auto& V = val(v.id);
  if (i >= V.size()) {
    throw ShapeError("pick: index " + std::to_string(i) + " out of range for " +
                     shape_str(nodes_[v.id].shape));
  }
  return push({}, {V[i]}, {v}, [v, i](Tape& t, std::size_t self) {
    t.gbuf(v.id)[i] += t.nodes_[self].grad[0];
  });
}

void Tape::backward(Var loss) {
  check(loss, "backward");
  if (numel(nodes_[loss.id].shape) != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " +
                     shape_str(nodes_[loss.id].shape));
  }
  if (!nodes_[loss.id].needs_grad) return;
  for (std::size_t i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[i];
    if (n.needs_grad && !n.leaf) n.grad.assign(n.value.size(), 0.0);
  }
  gbuf(loss.id)[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.backward) n.backward(*this, i);
  }
}

}  // namespace tripnet::nd
