#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ngalore/adam.hpp"
#include "ngalore/error.hpp"
#include "ngalore/reference.hpp"
#include "test_util.hpp"

namespace ngalore {
namespace {

TEST(Adam, FirstStepIsSignOfGradient) {
  AdamState s(2, 3, {});
  const Matrix g = Matrix::from_rows({{2.0, -0.5, 10.0}, {-3.0, 1.0, 0.25}});
  const Matrix u = s.update(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(u.data()[i], g.data()[i] > 0 ? 1.0 : -1.0, 1e-6);
  }
  EXPECT_EQ(s.step_count(), 1);
}

TEST(Adam, ZeroGradientsStayAtZero) {
  AdamState s(3, 3, {});
  for (int t = 0; t < 5; ++t) {
    EXPECT_EQ(s.update(Matrix(3, 3)), Matrix(3, 3));
  }
  EXPECT_EQ(s.first_moment(), Matrix(3, 3));
  EXPECT_EQ(s.second_moment(), Matrix(3, 3));
}

struct AdamVariant {
  bool bias_correction;
  EpsPlacement placement;
};

class AdamReference : public ::testing::TestWithParam<AdamVariant> {};

TEST_P(AdamReference, ScalarTrajectoryMatches) {
  AdamHyper hyper;
  hyper.bias_correction = GetParam().bias_correction;
  hyper.eps_placement = GetParam().placement;
  AdamState state(1, 1, hyper);
  reference::ScalarAdam scalar(0.9, 0.999, 1e-8, hyper.bias_correction,
                               hyper.eps_placement == EpsPlacement::inside_root);
  std::mt19937_64 gen(1);
  for (double g : test::gaussian(10, gen)) {
    const double u = state.update(Matrix(1, 1, {g}))(0, 0);
    EXPECT_NEAR(u, scalar.update(g), 1e-14);
  }
  EXPECT_EQ(state.step_count(), 10);
}

INSTANTIATE_TEST_SUITE_P(Variants, AdamReference,
                         ::testing::Values(AdamVariant{true, EpsPlacement::inside_root},
                                           AdamVariant{true, EpsPlacement::outside_root},
                                           AdamVariant{false, EpsPlacement::inside_root},
                                           AdamVariant{false, EpsPlacement::outside_root}),
                         [](const ::testing::TestParamInfo<AdamVariant>& info) {
                           return std::string(info.param.bias_correction ? "Corrected" : "Uncorrected") +
                                  (info.param.placement == EpsPlacement::inside_root ? "EpsInside" : "EpsOutside");
                         });

TEST(Adam, UpdatesStayBoundedAndSecondMomentNonNegative) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  AdamState s(4, 4, {});
  for (int t = 0; t < 200; ++t) {
    Matrix g(4, 4);
    for (double& x : g.data()) x = unif(gen);
    const Matrix u = s.update(g);
    for (double x : u.data()) EXPECT_LE(std::abs(x), 10.0);
    for (double x : s.second_moment().data()) EXPECT_GE(x, 0.0);
  }
}

TEST(Adam, SecondMomentApproachesSquaredConstantGradient) {
  AdamHyper hyper;
  hyper.bias_correction = false;
  AdamState s(1, 1, hyper);
  const double g = 0.7;
  double previous = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 50; ++t) {
    s.update(Matrix(1, 1, {t % 2 == 0 ? g : -g}));
    const double gap = std::abs(s.second_moment()(0, 0) - g * g);
    if (t > 0) {
      EXPECT_LT(gap, previous);
    }
    previous = gap;
  }
}

TEST(Adam, IdenticalSequencesAreBitwiseIdentical) {
  std::mt19937_64 gen(3);
  std::vector<Matrix> grads;
  for (int t = 0; t < 20; ++t) grads.push_back(test::random_matrix(3, 2, gen));
  AdamState a(3, 2, {}), b(3, 2, {});
  for (const Matrix& g : grads) EXPECT_EQ(a.update(g), b.update(g));
  EXPECT_EQ(a.first_moment(), b.first_moment());
  EXPECT_EQ(a.second_moment(), b.second_moment());
}

TEST(Adam, NonFiniteGradientNamesSlot) {
  AdamState s(1, 2, {});
  Matrix g(1, 2);
  g(0, 1) = std::numeric_limits<double>::quiet_NaN();  // bypasses the checked constructor
  try {
    s.update(g, "layer1.weight");
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& e) {
    EXPECT_NE(std::string(e.what()).find("layer1.weight"), std::string::npos);
  }
  EXPECT_EQ(s.step_count(), 0);
  EXPECT_THROW(s.update(Matrix(2, 1)), InvalidArgument);
}

TEST(Adam, RejectsInvalidHyperparameters) {
  AdamHyper h;
  h.beta1 = 1.0;
  EXPECT_THROW(AdamState(1, 1, h), InvalidArgument);
  h = {};
  h.epsilon = 0.0;
  EXPECT_THROW(AdamState(1, 1, h), InvalidArgument);
}

TEST(WeightDecay, Examples) {
  Matrix theta = Matrix::from_rows({{2.0, -1.0}});
  apply_weight_decay(theta, 0.0, 0.1);
  EXPECT_EQ(theta, Matrix::from_rows({{2.0, -1.0}}));
  apply_weight_decay(theta, 2.0, 0.5);
  EXPECT_EQ(theta, Matrix::from_rows({{0.0, -0.0}}));

  Matrix one = Matrix::from_rows({{2.0}});
  apply_weight_decay(one, 0.5, 0.1);
  EXPECT_NEAR(one(0, 0), 1.9, 1e-15);
  EXPECT_THROW(apply_weight_decay(one, -1.0, 0.1), InvalidArgument);
}

TEST(Adam, RestorePreservesState) {
  AdamState s(2, 2, {});
  std::mt19937_64 gen(4);
  s.update(test::random_matrix(2, 2, gen));
  AdamState r = AdamState::restore(s.hyper(), s.step_count(), s.first_moment(), s.second_moment());
  const Matrix g = test::random_matrix(2, 2, gen);
  EXPECT_EQ(s.update(g), r.update(g));
  EXPECT_THROW(AdamState::restore({}, 1, Matrix(2, 2), Matrix(2, 3)), FormatError);
}

}  // namespace
}  // namespace ngalore
