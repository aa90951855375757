#include <gtest/gtest.h>

#include <cmath>

#include "ngalore/autodiff.hpp"
#include "ngalore/error.hpp"
#include "ngalore/linalg.hpp"
#include "test_util.hpp"

namespace ngalore {
namespace {

using test::max_diff;
using test::random_matrix;

TEST(CrossEntropy, UniformLogitsGiveLogV) {
  for (std::size_t v : {2u, 7u, 65u}) {
    Graph g;
    const NodeId logits = g.constant(Matrix(3, v));
    g.softmax_cross_entropy(logits, {0, 1, static_cast<int>(v - 1)});
    EXPECT_NEAR(g.loss(), std::log(static_cast<double>(v)), 1e-15);
  }
}

TEST(CrossEntropy, LargeMarginSaturates) {
  Matrix z(2, 5);
  z(0, 3) = 20.0;
  z(1, 0) = 20.0;
  Graph g;
  g.softmax_cross_entropy(g.constant(z), {3, 0});
  EXPECT_LT(g.loss(), 1e-3);
  EXPECT_GT(g.loss(), 0.0);
}

TEST(CrossEntropy, BinaryCaseMatchesClosedForm) {
  // Logits (0, a): p(class 1) = sigmoid(a).
  const std::vector<double> a{-2.5, 0.3, 4.0};
  const std::vector<int> y{1, 0, 1};
  Matrix z(3, 2);
  for (std::size_t i = 0; i < 3; ++i) z(i, 1) = a[i];
  Graph g;
  g.softmax_cross_entropy(g.constant(z), y);
  double expected = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-a[i]));
    expected -= y[i] * std::log(p) + (1 - y[i]) * std::log(1.0 - p);
  }
  EXPECT_NEAR(g.loss(), expected / 3.0, 1e-12);
}

TEST(CrossEntropy, RejectsBadLabels) {
  Graph g;
  const NodeId z = g.constant(Matrix(2, 3));
  EXPECT_THROW(g.softmax_cross_entropy(z, {0, 3}), InvalidArgument);
  EXPECT_THROW(g.softmax_cross_entropy(z, {0, -1}), InvalidArgument);
  EXPECT_THROW(g.softmax_cross_entropy(z, {0}), InvalidArgument);
}

TEST(Backward, LinearLeastSquaresHandFormula) {
  // Row convention: prediction x W, loss |x W - t|^2, gradient 2 x^T (x W - t).
  std::mt19937_64 gen(1);
  const Matrix x = random_matrix(1, 4, gen);
  const Matrix w = random_matrix(4, 3, gen);
  const Matrix t = random_matrix(1, 3, gen);
  Graph g;
  const NodeId pred = g.matmul(g.constant(x), g.parameter("W", w));
  g.squared_error(pred, t);
  const GradientMap grads = g.backward();
  const Matrix expected = scale(matmul_tn(x, subtract(matmul(x, w), t)), 2.0);
  EXPECT_LE(max_diff(grads.at("W"), expected), 1e-14);
}

TEST(Backward, MlpMatchesFiniteDifferences) {
  std::mt19937_64 gen(2);
  const Matrix x = random_matrix(5, 4, gen);
  std::vector<Matrix> params{random_matrix(4, 6, gen), random_matrix(1, 6, gen),
                             random_matrix(6, 3, gen), random_matrix(1, 3, gen)};
  const std::vector<int> labels{0, 2, 1, 1, 0};
  const std::vector<std::string> names{"W1", "b1", "W2", "b2"};
  auto build = [&](Graph& g) {
    const NodeId h = g.tanh(g.add_bias(g.matmul(g.constant(x), g.parameter("W1", params[0])),
                                      g.parameter("b1", params[1])));
    const NodeId z = g.add_bias(g.matmul(h, g.parameter("W2", params[2])), g.parameter("b2", params[3]));
    g.softmax_cross_entropy(z, labels);
  };
  Graph g;
  build(g);
  const GradientMap grads = g.backward();
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double keep = params[p].data()[i];
      params[p].data()[i] = keep + 1e-5;
      Graph up;
      build(up);
      params[p].data()[i] = keep - 1e-5;
      Graph down;
      build(down);
      params[p].data()[i] = keep;
      const double fd = (up.loss() - down.loss()) / 2e-5;
      const double ad = grads.at(names[p]).data()[i];
      worst = std::max(worst, std::abs(fd - ad) / std::max({std::abs(fd), std::abs(ad), 1e-6}));
    }
  }
  EXPECT_LE(worst, 1e-5);
}

TEST(Backward, FanOutAccumulates) {
  // loss = |x W + x W|^2 with the same parameter node used twice.
  const Matrix x = Matrix::from_rows({{1.0, 2.0}});
  const Matrix w = Matrix::from_rows({{0.5}, {-1.0}});
  Graph g;
  const NodeId xn = g.constant(x);
  const NodeId wn = g.parameter("W", w);
  const NodeId a = g.matmul(xn, wn);
  const NodeId b = g.matmul(xn, wn);
  g.squared_error(g.add_bias(a, b), Matrix(1, 1));
  // y = 2 x W = -3, dL/dW = 2 * y * 2 x^T = -12 x^T
  const GradientMap grads = g.backward();
  EXPECT_DOUBLE_EQ(grads.at("W")(0, 0), -12.0);
  EXPECT_DOUBLE_EQ(grads.at("W")(1, 0), -24.0);
}

TEST(Backward, ZeroSeedGivesZeroGradients) {
  std::mt19937_64 gen(3);
  Graph g;
  const NodeId pred = g.matmul(g.constant(random_matrix(3, 4, gen)), g.parameter("W", random_matrix(4, 2, gen)));
  g.squared_error(pred, random_matrix(3, 2, gen));
  const GradientMap grads = g.backward(0.0);
  for (double v : grads.at("W").data()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, BeforeForwardIsUsageError) {
  Graph g;
  g.parameter("W", Matrix(2, 2));
  EXPECT_THROW(g.backward(), UsageError);
  EXPECT_THROW(g.loss(), UsageError);
}

TEST(Graph, RejectsShapeMismatchAndUnknownNodes) {
  Graph g;
  const NodeId a = g.constant(Matrix(2, 3));
  const NodeId b = g.constant(Matrix(2, 3));
  EXPECT_THROW(g.matmul(a, b), InvalidArgument);
  EXPECT_THROW(g.add_bias(a, g.constant(Matrix(1, 2))), InvalidArgument);
  EXPECT_THROW(g.tanh(99), InvalidArgument);
  EXPECT_THROW(g.squared_error(a, Matrix(3, 2)), InvalidArgument);
}

}  // namespace
}  // namespace ngalore
