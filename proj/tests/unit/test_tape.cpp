#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "tripnet/tape.hpp"

using namespace tripnet;
using nd::Tape;
using nd::Tensor;
using nd::Var;

TEST(Tape, SigmoidOfZerosIsHalf) {
  Tape t;
  const Var y = t.sigmoid(t.constant(std::vector<double>{0, 0, 0}));
  for (double v : t.value(y)) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Tape, IdentityMatmulReturnsOperand) {
  Tape t;
  Tensor eye = Tensor::zeros({2, 2});
  eye.values = {1, 0, 0, 1};
  Tensor a = Tensor::zeros({2, 3});
  a.values = {1, -2, 3, 4.5, 5, -6};
  const Var y = t.matmul(t.constant(eye), t.constant(a));
  EXPECT_EQ(t.shape(y), (nd::Shape{2, 3}));
  EXPECT_EQ(t.value(y), a.values);
}

TEST(Tape, SoftmaxOfEqualLogitsIsUniform) {
  Tape t;
  const Var y = t.softmax(t.constant(std::vector<double>{1, 1, 1, 1}));
  for (double v : t.value(y)) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Tape, SoftmaxIsStableForLargeLogits) {
  Tape t;
  const Var y = t.softmax(t.constant(std::vector<double>{1000, 1000, -1000}));
  EXPECT_NEAR(t.value(y)[0], 0.5, 1e-12);
  EXPECT_NEAR(t.value(y)[2], 0.0, 1e-12);
  const Var ly = t.log_softmax(t.constant(std::vector<double>{1000, 0}));
  EXPECT_NEAR(t.value(ly)[1], -1000.0, 1e-9);
}

TEST(Tape, SumOfSquaresGradient) {
  Tensor x = Tensor::vector({1, 2, 3});
  x.enable_grad();
  Tape t;
  const Var v = t.bind(x);
  t.backward(t.sum(t.mul(v, v)));
  EXPECT_EQ(x.grad, (std::vector<double>{2, 4, 6}));
}

TEST(Tape, SigmoidGradientAtZero) {
  Tensor x = Tensor::scalar(0.0);
  x.enable_grad();
  Tape t;
  t.backward(t.sigmoid(t.bind(x)));
  EXPECT_DOUBLE_EQ(x.grad[0], 0.25);
}

TEST(Tape, RepeatedBackwardAccumulates) {
  Tensor x = Tensor::vector({1, 2, 3});
  x.enable_grad();
  Tape t;
  const Var v = t.bind(x);
  const Var loss = t.sum(t.mul(v, v));
  t.backward(loss);
  t.backward(loss);
  EXPECT_EQ(x.grad, (std::vector<double>{4, 8, 12}));
}

TEST(Tape, NonScalarLossRejected) {
  Tensor x = Tensor::vector({1, 2});
  x.enable_grad();
  Tape t;
  const Var v = t.bind(x);
  EXPECT_THROW(t.backward(v), nd::ShapeError);
}

TEST(Tape, ShapeMismatchRejected) {
  Tape t;
  const Var a = t.constant(std::vector<double>{1, 2});
  const Var b = t.constant(std::vector<double>{1, 2, 3});
  EXPECT_THROW(t.add(a, b), nd::ShapeError);
  EXPECT_THROW(t.mul(a, b), nd::ShapeError);
  EXPECT_THROW(t.matmul(a, b), nd::ShapeError);
}

TEST(Tape, MeanOverAxes) {
  Tensor m = Tensor::zeros({2, 3});
  m.values = {1, 2, 3, 4, 5, 6};
  Tape t;
  const Var c = t.constant(m);
  EXPECT_EQ(t.value(t.mean(c, 0)), (std::vector<double>{2.5, 3.5, 4.5}));
  EXPECT_EQ(t.value(t.mean(c, 1)), (std::vector<double>{2, 5}));
  EXPECT_THROW(t.mean(c, 2), nd::ShapeError);
}

TEST(Tape, ApplyDispatchesByKind) {
  Tape t;
  const Var a = t.constant(std::vector<double>{1, 2});
  const Var b = t.constant(std::vector<double>{3, 4});
  const Var in[] = {a, b};
  EXPECT_EQ(t.value(t.apply(nd::OpKind::kAdd, in)), (std::vector<double>{4, 6}));
  EXPECT_EQ(t.value(t.apply(nd::OpKind::kConcat, in)), (std::vector<double>{1, 2, 3, 4}));
  const Var one[] = {a};
  EXPECT_THROW(t.apply(nd::OpKind::kAdd, one), std::invalid_argument);
}

TEST(Tape, GradDisabledRecordsNoGradients) {
  Tensor x = Tensor::vector({1, 2});
  x.enable_grad();
  Tape t;
  t.set_grad_enabled(false);
  const Var v = t.bind(x);
  t.backward(t.sum(t.mul(v, v)));
  EXPECT_EQ(x.grad, (std::vector<double>{0, 0}));
}

TEST(Tape, EveryOpMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int c = 0; c < 20; ++c) {
    nd::ParamSet p;
    p.add("a", {2, 3});
    p.add("b", {3});
    p.add("m", {3, 4});
    check::fill_uniform(p, rng, 1.0);
    const auto w = check::random_vector(11, rng);
    auto loss = [&](Tape& t, nd::ParamSet& ps) {
      const Var a = t.bind(ps.at("a"));
      const Var b = t.bind(ps.at("b"));
      const Var m = t.bind(ps.at("m"));
      const Var h = t.tanh(t.add(t.mean(a, 0), t.sigmoid(b)));
      const Var z = t.matmul(h, m);
      const Var lp = t.log_softmax(z);
      const Var lsm = t.log(t.softmax(t.sub(h, t.row(a, 1))));
      const Var tail = t.concat(t.scale(t.mean(a, 1), 3.0), t.neg(t.matmul(a, b)));
      const Var y = t.concat(t.concat(lp, lsm), tail);
      return t.add(check::weighted_sum(t, y, w), t.pick(z, 2));
    };
    const auto res = check::check_gradients(p, loss);
    EXPECT_LT(res.max_rel_error, 1e-4) << "case " << c << ": " << res.worst;
  }
}
