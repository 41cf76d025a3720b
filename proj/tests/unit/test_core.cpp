#include <gtest/gtest.h>

#include <cmath>

#include "apm/core/adam.hpp"
#include "apm/core/gradcheck.hpp"
#include "apm/core/ops.hpp"
#include "apm/core/parameters.hpp"

using namespace apm;

namespace {

Tensor<double> random_tensor(Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

Var<double> C(Tensor<double> t) { return Var<double>::constant(std::move(t)); }

}  // namespace

TEST(Tensor, RejectsZeroExtent) { EXPECT_THROW(Tensor<float>({2, 0}), DimensionError); }

TEST(Tensor, ShapeSizeMatchesData) {
  Tensor<float> t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(shape_string(t.shape()), "[2x3x4]");
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  auto b = Tensor<double>::matrix({{1, 2}, {3, 4}, {5, 6}});
  auto out = ops::matmul(C(Tensor<double>::identity(3)), C(b));
  EXPECT_EQ(out.value(), b);
}

TEST(Matmul, HandArithmetic) {
  auto out = ops::matmul(C(Tensor<double>::matrix({{1, 2}, {3, 4}})), C(Tensor<double>::matrix({{1}, {1}})));
  EXPECT_EQ(out.value(), Tensor<double>::matrix({{3}, {7}}));
}

TEST(Matmul, MismatchNamesBothShapes) {
  try {
    ops::matmul(C(Tensor<double>({2, 3})), C(Tensor<double>({4, 2})));
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[4x2]"), std::string::npos);
  }
}

TEST(Conv, WidthOneIdentityKernel) {
  Rng rng(3);
  auto x = random_tensor({5, 2}, rng);
  Tensor<double> k({1, 2, 2});
  k[0] = k[3] = 1.0;
  auto out = ops::dilated_conv1d(C(x), C(k), 1, Var<double>());
  EXPECT_EQ(out.value(), x);
}

TEST(Conv, ConstantInput) {
  auto out = ops::dilated_conv1d(C(Tensor<double>({5, 1}, 1.0)), C(Tensor<double>({3, 1, 1}, 1.0)), 1,
                                 C(Tensor<double>({1}, 0.0)));
  EXPECT_EQ(out.value(), Tensor<double>({3, 1}, 3.0));
}

TEST(Conv, MatchesDirectSummation) {
  Rng rng(11);
  const std::size_t F = 13, Cin = 3, Cout = 4, w = 3, d = 2;
  auto x = random_tensor({F, Cin}, rng);
  auto k = random_tensor({w, Cin, Cout}, rng);
  auto b = random_tensor({Cout}, rng);
  auto out = ops::dilated_conv1d(C(x), C(k), d, C(b)).value();
  const std::size_t Fo = F - d * (w - 1);
  ASSERT_EQ(out.shape(), (Shape{Fo, Cout}));
  for (std::size_t t = 0; t < Fo; ++t) {
    for (std::size_t o = 0; o < Cout; ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < w; ++i)
        for (std::size_t c = 0; c < Cin; ++c) s += x[(t + i * d) * Cin + c] * k[(i * Cin + c) * Cout + o];
      EXPECT_EQ(out[t * Cout + o], s);
    }
  }
}

TEST(Conv, TooShortSequence) {
  EXPECT_THROW(ops::dilated_conv1d(C(Tensor<double>({4, 1})), C(Tensor<double>({3, 1, 1})), 2, Var<double>()),
               SequenceTooShortError);
}

TEST(Softmax, UniformForEqualRow) {
  auto y = ops::softmax(C(Tensor<double>({1, 5}, 0.3)), 1).value();
  for (double v : y.data()) EXPECT_DOUBLE_EQ(v, 0.2);
}

TEST(Softmax, AnalyticPair) {
  auto y = ops::softmax(C(Tensor<double>({1, 2}, std::vector<double>{std::log(2.0), 0.0})), 1).value();
  EXPECT_NEAR(y[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(y[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LargeInputStaysFinite) {
  auto y = ops::softmax(C(Tensor<double>({1, 2}, std::vector<double>{1e4, 0.0})), 1).value();
  EXPECT_TRUE(y.all_finite());
  EXPECT_DOUBLE_EQ(y[0] + y[1], 1.0);
}

TEST(Softmax, RowsSumToOne) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto x = random_tensor({3, 7}, rng);
    for (auto& v : x.data()) v *= 20.0;
    auto y = ops::softmax(C(x), 1).value();
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 7; ++c) {
        s += y[r * 7 + c];
        EXPECT_GT(y[r * 7 + c], 0.0);
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Attention, SingleKeyReturnsValueRow) {
  Rng rng(8);
  auto q = random_tensor({3, 4}, rng), k = random_tensor({1, 4}, rng), v = random_tensor({1, 4}, rng);
  auto out = ops::scaled_dot_attention(C(q), C(k), C(v)).value();
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out[r * 4 + c], v[c]);
}

TEST(Attention, OrthogonalQueryAveragesValues) {
  auto q = Tensor<double>::matrix({{1, 0}});
  auto k = Tensor<double>::matrix({{0, 1}, {0, -2}, {0, 3}});
  auto v = Tensor<double>::matrix({{1, 2}, {3, 4}, {5, 9}});
  auto out = ops::scaled_dot_attention(C(q), C(k), C(v)).value();
  EXPECT_NEAR(out[0], 3.0, 1e-12);
  EXPECT_NEAR(out[1], 5.0, 1e-12);
}

TEST(Attention, MatchesDirectEvaluation) {
  Rng rng(21);
  auto q = random_tensor({3, 4}, rng), k = random_tensor({5, 4}, rng), v = random_tensor({5, 4}, rng);
  auto out = ops::scaled_dot_attention(C(q), C(k), C(v)).value();
  for (std::size_t i = 0; i < 3; ++i) {
    double w[5], z = 0.0, mx = -1e300;
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < 4; ++c) s += q[i * 4 + c] * k[j * 4 + c];
      w[j] = s / 2.0;
      mx = std::max(mx, w[j]);
    }
    for (double& x : w) z += (x = std::exp(x - mx));
    for (std::size_t c = 0; c < 4; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < 5; ++j) s += w[j] / z * v[j * 4 + c];
      EXPECT_NEAR(out[i * 4 + c], s, 1e-14);
    }
  }
}

TEST(Cosine, PositiveScaleInvariance) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto rows = random_tensor({4, 6}, rng), v = random_tensor({1, 6}, rng);
    const double alpha = rng.uniform(0.01, 100.0);
    Tensor<double> scaled = v;
    for (auto& x : scaled.data()) x *= alpha;
    auto a = ops::cosine_rows(C(rows), C(v)).value();
    auto b = ops::cosine_rows(C(rows), C(scaled)).value();
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
  }
}

TEST(Dropout, IdentityOutsideTraining) {
  Rng rng(1);
  auto x = random_tensor({4, 4}, rng);
  EXPECT_EQ(ops::dropout(C(x), 0.5, false, rng).value(), x);
  EXPECT_EQ(ops::dropout(C(x), 0.0, true, rng).value(), x);
}

TEST(Determinism, SameSeedSameOps) {
  auto run = [] {
    Rng rng(42);
    auto a = random_tensor({4, 4}, rng), b = random_tensor({4, 4}, rng);
    return ops::softmax(ops::matmul(C(a), C(b)), 1).value();
  };
  EXPECT_EQ(run(), run());
}

TEST(Backward, EveryTrainableLeafGetsSameShapeGrad) {
  ParameterStore<double> store;
  Rng rng(2);
  auto w = store.add("w", random_tensor({3, 2}, rng));
  auto b = store.add("b", random_tensor({2}, rng));
  auto x = C(random_tensor({4, 3}, rng));
  backward(ops::sum(ops::relu(ops::linear(x, w, b))));
  ASSERT_TRUE(w.has_grad());
  ASSERT_TRUE(b.has_grad());
  EXPECT_EQ(w.grad().shape(), w.shape());
  EXPECT_EQ(b.grad().shape(), b.shape());
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ParameterStore<float> store;
  auto p = store.add("p", Tensor<float>({3}, 1.5f));
  p.node()->grad_buffer();
  Adam<float> adam;
  adam.step(store);
  EXPECT_EQ(p.value(), Tensor<float>({3}, 1.5f));
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParameterStore<double> store;
  auto p = store.add("p", Tensor<double>({1}, 0.0));
  p.node()->grad_buffer()[0] = 1.0;
  Adam<double> adam;
  adam.step(store);
  EXPECT_NEAR(p.value()[0], -1e-3, 1e-9);
}

TEST(Adam, FrozenParameterUntouched) {
  ParameterStore<double> store;
  auto frozen = store.add("f", Tensor<double>({2}, 0.5), ParamKind::frozen);
  auto live = store.add("l", Tensor<double>({2}, 0.5));
  frozen.node()->grad_buffer()[0] = 3.0;
  live.node()->grad_buffer()[0] = 3.0;
  Adam<double> adam;
  adam.step(store);
  EXPECT_EQ(frozen.value(), Tensor<double>({2}, 0.5));
  EXPECT_EQ(adam.moments().count("f"), 0u);
}

TEST(Adam, MissingGradientIsTrainingError) {
  ParameterStore<double> store;
  store.add("p", Tensor<double>({1}, 0.0));
  Adam<double> adam;
  EXPECT_THROW(adam.step(store), TrainingError);
}

TEST(GradCheck, SquareAtThree) {
  auto x = Var<double>::leaf(Tensor<double>({1}, 3.0), true);
  auto r = grad_check("square", [&] { return ops::mul(x, x); }, {{"x", x}});
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.worst_analytic, 6.0, 1e-12);
  EXPECT_NEAR(r.worst_numeric, 6.0, 1e-6);
}

TEST(GradCheck, ConstantFunction) {
  auto x = Var<double>::leaf(Tensor<double>({2}, 1.0), true);
  auto r = grad_check("const", [&] { return Var<double>::constant(Tensor<double>({1}, 4.0)); }, {{"x", x}});
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.worst_analytic, 0.0);
  EXPECT_EQ(r.worst_numeric, 0.0);
}

TEST(GradCheck, NonFiniteLossAborts) {
  auto x = Var<double>::leaf(Tensor<double>({1}, -1.0), true);
  EXPECT_THROW(grad_check("log", [&] { return ops::log(x); }, {{"x", x}}), GradCheckError);
}

TEST(NoGrad, GuardSuppressesTape) {
  auto x = Var<double>::leaf(Tensor<double>({1}, 2.0), true);
  {
    NoGradGuard guard;
    EXPECT_FALSE(ops::mul(x, x).requires_grad());
  }
  EXPECT_TRUE(ops::mul(x, x).requires_grad());
}

TEST(Backward, ZeroUpstreamStillReachesCosineInputs) {
  Rng rng(12);
  auto rows = Var<double>::leaf(random_tensor({3, 4}, rng), true);
  auto v = Var<double>::leaf(random_tensor({1, 4}, rng), true);
  backward(ops::scale(ops::sum(ops::cosine_rows(rows, v)), 0.0));
  ASSERT_TRUE(rows.has_grad());
  ASSERT_TRUE(v.has_grad());
  EXPECT_EQ(rows.grad(), Tensor<double>({3, 4}, 0.0));
}
