#include <gtest/gtest.h>

#include "ngalore/error.hpp"
#include "ngalore/linalg.hpp"
#include "ngalore/projector.hpp"
#include "ngalore/reference.hpp"
#include "test_util.hpp"

namespace ngalore {
namespace {

using test::max_diff;
using test::random_matrix;

Projector refreshed(const Matrix& grad, std::size_t rank, Side side, std::int64_t period = 200) {
  Projector p(grad.rows(), grad.cols(), rank, side, period);
  p.refresh(grad, 0);
  return p;
}

TEST(Projector, DefaultSideKeepsProjectedStateSmall) {
  EXPECT_EQ(default_side(64, 64), Side::left);
  EXPECT_EQ(default_side(32, 64), Side::left);
  EXPECT_EQ(default_side(128, 64), Side::right);
}

TEST(Projector, RankOneLeftFactorIsNormalizedU) {
  const std::vector<double> u{3.0, 0.0, -4.0};
  Matrix g(3, 4);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) g(i, j) = u[i] * static_cast<double>(j + 1);
  const Projector p = refreshed(g, 1, Side::left);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(p.factor()(i, 0)), std::abs(u[i]) / 5.0, 1e-12);
  EXPECT_GT(p.factor()(2, 0), 0.0);  // largest-magnitude entry made positive
}

TEST(Projector, DegenerateIdentityGradientGivesInvariantSubspace) {
  const Projector p = refreshed(Matrix::identity(4), 2, Side::left);
  EXPECT_LE(orthonormality_error(p.factor()), 1e-10);
  std::mt19937_64 gen(1);
  const Matrix g = random_matrix(4, 4, gen);
  const Matrix once = p.project_back(p.project(g));
  EXPECT_LE(max_diff(p.project_back(p.project(once)), once), 1e-12);
}

TEST(Projector, LeadingSubspaceMatchesJacobiOracle) {
  std::mt19937_64 gen(2);
  const Matrix g = random_matrix(8, 6, gen);
  const Projector left = refreshed(g, 3, Side::left);
  const Projector right = refreshed(g, 3, Side::right);
  const reference::FullSvd oracle = reference::jacobi_svd(g);
  Matrix u(8, 3), v(6, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 8; ++i) u(i, k) = oracle.left(i, k);
    for (std::size_t j = 0; j < 6; ++j) v(j, k) = oracle.right(j, k);
  }
  EXPECT_LE(reference::max_principal_angle(left.factor(), u), 1e-6);
  EXPECT_LE(reference::max_principal_angle(right.factor(), v), 1e-6);
}

TEST(Projector, ProjectMatchesExplicitProducts) {
  std::mt19937_64 gen(3);
  const Matrix g = random_matrix(10, 7, gen);
  const Projector left = refreshed(g, 3, Side::left);
  const Projector right = refreshed(g, 3, Side::right);
  const Matrix h = random_matrix(10, 7, gen);
  EXPECT_LE(max_diff(left.project(h), matmul(transpose(left.factor()), h)), 1e-14);
  EXPECT_LE(max_diff(right.project(h), matmul(h, right.factor())), 1e-14);
  EXPECT_EQ(left.projected_rows(), 3u);
  EXPECT_EQ(left.projected_cols(), 7u);
  EXPECT_EQ(right.projected_rows(), 10u);
  EXPECT_EQ(right.projected_cols(), 3u);

  const Matrix ul = random_matrix(3, 7, gen);
  const Matrix ur = random_matrix(10, 3, gen);
  EXPECT_LE(max_diff(left.project_back(ul), matmul(left.factor(), ul)), 1e-14);
  EXPECT_LE(max_diff(right.project_back(ur), matmul(ur, transpose(right.factor()))), 1e-14);
  EXPECT_EQ(left.project_back(Matrix(3, 7)), Matrix(10, 7));
}

TEST(Projector, InSubspaceRoundTripAndOrthogonalComplement) {
  std::mt19937_64 gen(4);
  const Projector p = refreshed(random_matrix(8, 5, gen), 3, Side::left);
  const Matrix inside = matmul(p.factor(), random_matrix(3, 5, gen));
  EXPECT_LE(max_diff(p.project_back(p.project(inside)), inside), 1e-12);

  Matrix outside = random_matrix(8, 5, gen);
  outside = subtract(outside, matmul(p.factor(), matmul_tn(p.factor(), outside)));
  outside = subtract(outside, matmul(p.factor(), matmul_tn(p.factor(), outside)));
  EXPECT_LE(max_abs(p.project(outside)), 1e-12);
}

TEST(Projector, NonExpansiveAndIdempotent) {
  std::mt19937_64 gen(5);
  for (Side side : {Side::left, Side::right}) {
    const Projector p = refreshed(random_matrix(9, 6, gen), 2, side);
    for (int t = 0; t < 10; ++t) {
      const Matrix g = random_matrix(9, 6, gen);
      const Matrix once = p.project_back(p.project(g));
      EXPECT_LE(frobenius_norm(once), frobenius_norm(g) * (1.0 + 1e-14));
      EXPECT_LE(max_diff(p.project_back(p.project(once)), once), 1e-10);
    }
  }
}

TEST(Projector, ExactLowRankEnergyIsCaptured) {
  std::mt19937_64 gen(6);
  const Matrix g = matmul(random_matrix(12, 3, gen), random_matrix(3, 9, gen));
  const Projector p = refreshed(g, 3, Side::left);
  const Matrix rest = subtract(g, p.project_back(p.project(g)));
  EXPECT_LE(frobenius_norm(rest), 1e-8 * frobenius_norm(g));
}

TEST(Projector, RefreshSchedule) {
  Projector p(4, 4, 2, Side::left, 200);
  EXPECT_FALSE(p.initialized());
  EXPECT_TRUE(p.should_refresh(0));
  std::mt19937_64 gen(7);
  p.refresh(random_matrix(4, 4, gen), 0);
  EXPECT_FALSE(p.should_refresh(0));
  EXPECT_FALSE(p.should_refresh(199));
  EXPECT_TRUE(p.should_refresh(200));
  EXPECT_EQ(p.last_refresh_step(), 0);
}

TEST(Projector, FactorIsOrthonormalAfterEveryRefresh) {
  std::mt19937_64 gen(8);
  Projector p(16, 12, 5, Side::right, 1);
  for (std::int64_t step = 0; step < 10; ++step) {
    p.refresh(random_matrix(16, 12, gen), step);
    EXPECT_LE(orthonormality_error(p.factor()), 1e-10);
  }
}

TEST(Projector, UsageAndShapeErrors) {
  Projector p(4, 6, 2, Side::left, 10);
  EXPECT_THROW(p.project(Matrix(4, 6)), UsageError);
  EXPECT_THROW(p.project_back(Matrix(2, 6)), UsageError);
  std::mt19937_64 gen(9);
  p.refresh(random_matrix(4, 6, gen), 0);
  EXPECT_THROW(p.project(Matrix(6, 4)), InvalidArgument);
  EXPECT_THROW(p.project_back(Matrix(4, 6)), InvalidArgument);
  EXPECT_THROW(p.refresh(Matrix(4, 5), 1), InvalidArgument);
  EXPECT_THROW(Projector(4, 6, 5, Side::left, 10), InvalidArgument);
  EXPECT_THROW(Projector(4, 6, 2, Side::left, 0), InvalidArgument);
}

TEST(Projector, RestoreValidatesFactor) {
  std::mt19937_64 gen(10);
  const Projector p = refreshed(random_matrix(6, 6, gen), 2, Side::left);
  const Projector q = Projector::restore(6, 6, 2, Side::left, 200, 0, p.factor());
  EXPECT_EQ(q.factor(), p.factor());
  EXPECT_THROW(Projector::restore(6, 6, 2, Side::left, 200, 0, scale(p.factor(), 2.0)),
               FormatError);
  EXPECT_THROW(Projector::restore(6, 6, 2, Side::left, 200, 0, Matrix(6, 3)), FormatError);
}

}  // namespace
}  // namespace ngalore
