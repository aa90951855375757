#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ngalore/error.hpp"
#include "ngalore/linalg.hpp"
#include "ngalore/reference.hpp"
#include "test_util.hpp"

namespace ngalore {
namespace {

using test::max_diff;
using test::random_matrix;

TEST(Matrix, RejectsBadConstruction) {
  EXPECT_THROW(Matrix(0, 3), InvalidArgument);
  EXPECT_THROW(Matrix(2, 2, {1.0, 2.0, 3.0}), InvalidArgument);
  EXPECT_THROW(Matrix(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}), InvalidArgument);
  EXPECT_THROW(Matrix(1, 1, {std::numeric_limits<double>::infinity()}), InvalidArgument);
  EXPECT_TRUE(Matrix().empty());
}

TEST(Matrix, EqualityIsBitwise) {
  const Matrix a = Matrix::from_rows({{0.0, 1.0}});
  Matrix b = Matrix::from_rows({{-0.0, 1.0}});
  EXPECT_FALSE(a == b);
  b(0, 0) = 0.0;
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == Matrix::from_rows({{0.0}, {1.0}}));
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  std::mt19937_64 gen(1);
  const Matrix a = random_matrix(3, 3, gen);
  EXPECT_EQ(matmul(Matrix::identity(3), a), a);
}

TEST(Matmul, PermutationSwapsColumns) {
  const Matrix c = matmul(Matrix::from_rows({{1, 2}, {3, 4}}), Matrix::from_rows({{0, 1}, {1, 0}}));
  EXPECT_EQ(c, Matrix::from_rows({{2, 1}, {4, 3}}));
}

TEST(Matmul, MatchesTripleLoopOracle) {
  std::mt19937_64 gen(2);
  const Matrix a = random_matrix(5, 4, gen);
  const Matrix b = random_matrix(4, 3, gen);
  const Matrix c = matmul(a, b);
  const Matrix oracle = reference::naive_matmul(a, b);
  // Both accumulate over k in ascending order.
  EXPECT_EQ(c, oracle);
  EXPECT_LE(max_diff(matmul_tn(transpose(a), b), oracle), 1e-14);
  EXPECT_LE(max_diff(matmul_nt(a, transpose(b)), oracle), 1e-14);
}

TEST(Matmul, RejectsDimensionMismatch) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), InvalidArgument);
  EXPECT_THROW(matmul_tn(Matrix(2, 3), Matrix(3, 3)), InvalidArgument);
  EXPECT_THROW(matmul_nt(Matrix(2, 3), Matrix(2, 2)), InvalidArgument);
}

TEST(Transpose, Examples) {
  std::mt19937_64 gen(3);
  const Matrix a = random_matrix(4, 7, gen);
  EXPECT_EQ(transpose(transpose(a)), a);
  const Matrix s = Matrix::from_rows({{1, 2}, {2, 5}});
  EXPECT_EQ(transpose(s), s);
  EXPECT_EQ(transpose(Matrix::from_rows({{1, 2, 3}})), Matrix::from_rows({{1}, {2}, {3}}));
}

TEST(FrobeniusNorm, Examples) {
  EXPECT_EQ(frobenius_norm(Matrix(2, 3)), 0.0);
  EXPECT_DOUBLE_EQ(frobenius_norm(Matrix::identity(3)), std::sqrt(3.0));
  EXPECT_EQ(frobenius_norm(Matrix::from_rows({{3, 4}})), 5.0);
}

TEST(Elementwise, AddSubtractScaleAxpy) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{0.5, -1}, {2, 0}});
  EXPECT_EQ(add(a, b), Matrix::from_rows({{1.5, 1}, {5, 4}}));
  EXPECT_EQ(subtract(a, b), Matrix::from_rows({{0.5, 3}, {1, 4}}));
  EXPECT_EQ(scale(a, 2.0), Matrix::from_rows({{2, 4}, {6, 8}}));
  Matrix y = a;
  axpy(-2.0, b, y);
  EXPECT_EQ(y, Matrix::from_rows({{0, 4}, {-1, 4}}));
  EXPECT_THROW(add(a, Matrix(2, 3)), InvalidArgument);
  EXPECT_EQ(max_abs(b), 2.0);
}

TEST(Orthonormalize, CompletesDependentColumns) {
  Matrix a(6, 4);
  for (std::size_t i = 0; i < 6; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = 2.0;  // parallel to column 0
  }
  orthonormalize_columns(a);
  EXPECT_LE(orthonormality_error(a), 1e-12);
}

TEST(Orthonormalize, FullSquareFromLowRank) {
  // Rank 1 block of a square matrix needs completion of almost every column.
  Matrix a(64, 64);
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j) a(i, j) = 1.0 + static_cast<double>(i);
  orthonormalize_columns(a);
  EXPECT_LE(orthonormality_error(a), 1e-12);
}

TEST(CompactSvd, IdentityHasUnitSingularValues) {
  const CompactSVD svd = compact_svd(Matrix::identity(4), 4);
  ASSERT_EQ(svd.sigma.size(), 4u);
  for (double s : svd.sigma) EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_LE(orthonormality_error(svd.left), 1e-10);
  EXPECT_LE(orthonormality_error(svd.right), 1e-10);
}

TEST(CompactSvd, RankOneOuterProduct) {
  // |u| = 2, |v| = 3.
  const std::vector<double> u{0.0, 2.0, 0.0, 0.0};
  const std::vector<double> v{1.0, 2.0, 2.0};
  Matrix a(4, 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) a(i, j) = u[i] * v[j];
  const CompactSVD svd = compact_svd(a, 1);
  EXPECT_NEAR(svd.sigma[0], 6.0, 1e-12);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(svd.left(i, 0)), u[i] / 2.0, 1e-12);
  // Sign convention: largest-magnitude entry of the left vector is positive.
  EXPECT_GT(svd.left(1, 0), 0.0);
}

TEST(CompactSvd, PlantedRankReconstructsAndMatchesJacobi) {
  std::mt19937_64 gen(4);
  const Matrix a = matmul(random_matrix(6, 2, gen), random_matrix(2, 5, gen));
  const CompactSVD svd = compact_svd(a, 2);
  Matrix rebuilt(6, 5);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t k = 0; k < 2; ++k)
        rebuilt(i, j) += svd.left(i, k) * svd.sigma[k] * svd.right(j, k);
  EXPECT_LE(frobenius_norm(subtract(a, rebuilt)) / frobenius_norm(a), 1e-8);
  const reference::FullSvd oracle = reference::jacobi_svd(a);
  EXPECT_NEAR(svd.sigma[0], oracle.sigma[0], 1e-10 * oracle.sigma[0]);
  EXPECT_NEAR(svd.sigma[1], oracle.sigma[1], 1e-10 * oracle.sigma[0]);
}

TEST(CompactSvd, SigmaNonIncreasingAndFactorsOrthonormal) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(9, 7, gen);
    const CompactSVD svd = compact_svd(a, 4);
    for (std::size_t k = 1; k < svd.sigma.size(); ++k) EXPECT_LE(svd.sigma[k], svd.sigma[k - 1]);
    EXPECT_GE(svd.sigma.back(), 0.0);
    EXPECT_LE(orthonormality_error(svd.left), 1e-10);
    EXPECT_LE(orthonormality_error(svd.right), 1e-10);
  }
}

TEST(CompactSvd, IsDeterministic) {
  std::mt19937_64 gen(6);
  const Matrix a = random_matrix(12, 10, gen);
  const CompactSVD x = compact_svd(a, 3);
  const CompactSVD y = compact_svd(a, 3);
  EXPECT_EQ(x.left, y.left);
  EXPECT_EQ(x.right, y.right);
  EXPECT_EQ(x.sigma, y.sigma);
}

TEST(CompactSvd, RejectsRankOutOfRange) {
  EXPECT_THROW(compact_svd(Matrix(3, 4), 0), InvalidArgument);
  EXPECT_THROW(compact_svd(Matrix(3, 4), 4), InvalidArgument);
}

TEST(CompactSvd, IterationCapReportsCount) {
  std::mt19937_64 gen(7);
  const Matrix a = random_matrix(40, 40, gen);
  SvdOptions opts;
  opts.max_iterations = 1;
  opts.oversample = 0;
  opts.tolerance = 0.0;
  try {
    compact_svd(a, 2, opts);
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& e) {
    EXPECT_EQ(e.iterations(), 1u);
  }
}

TEST(CompactSvd, ZeroMatrixGivesZeroSigmaAndOrthonormalFactors) {
  const CompactSVD svd = compact_svd(Matrix(5, 4), 2);
  for (double s : svd.sigma) EXPECT_EQ(s, 0.0);
  EXPECT_LE(orthonormality_error(svd.left), 1e-12);
  EXPECT_LE(orthonormality_error(svd.right), 1e-12);
}

TEST(Cholesky, IdentityFactorIsIdentity) {
  EXPECT_EQ(cholesky_factor(Matrix::identity(5)).lower(), Matrix::identity(5));
}

TEST(Cholesky, HandExample) {
  const CholeskyFactor f = cholesky_factor(Matrix::from_rows({{4, 2}, {2, 3}}));
  EXPECT_EQ(f.lower()(0, 0), 2.0);
  EXPECT_EQ(f.lower()(0, 1), 0.0);
  EXPECT_EQ(f.lower()(1, 0), 1.0);
  EXPECT_NEAR(f.lower()(1, 1), std::sqrt(2.0), 1e-15);
  const std::vector<double> z = solve_cholesky(f, std::vector<double>{4.0, 2.0});
  EXPECT_NEAR(z[0], 1.0, 1e-15);
  EXPECT_NEAR(z[1], 0.0, 1e-15);
}

TEST(Cholesky, WoodburyStyleMatrixIsSpd) {
  std::mt19937_64 gen(8);
  const Matrix g = random_matrix(30, 6, gen);
  Matrix s = scale(matmul_tn(g, g), 1.0 / 1e-2);
  for (std::size_t i = 0; i < 6; ++i) s(i, i) += 1.0;
  const CholeskyFactor f = cholesky_factor(s);
  const Matrix back = matmul_nt(f.lower(), f.lower());
  EXPECT_LE(frobenius_norm(subtract(back, s)) / frobenius_norm(s), 1e-10);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_GT(f.lower()(i, i), 0.0);
    for (std::size_t j = i + 1; j < 6; ++j) EXPECT_EQ(f.lower()(i, j), 0.0);
  }
}

TEST(Cholesky, RandomSpdSolveMatchesDenseOracle) {
  std::mt19937_64 gen(9);
  const Matrix b = random_matrix(8, 8, gen);
  Matrix s = matmul_tn(b, b);
  for (std::size_t i = 0; i < 8; ++i) s(i, i) += 0.5;
  const std::vector<double> y = test::gaussian(8, gen);
  const std::vector<double> z = solve_cholesky(cholesky_factor(s), y);
  const std::vector<double> oracle = reference::dense_solve(s, y);
  EXPECT_LE(max_diff(z, oracle) / max_abs(oracle), 1e-10);
  double residual = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    double row = -y[i];
    for (std::size_t j = 0; j < 8; ++j) row += s(i, j) * z[j];
    residual = std::max(residual, std::abs(row));
  }
  EXPECT_LE(residual / max_abs(y), 1e-9);
}

TEST(Cholesky, IdentityFactorSolveReturnsRhs) {
  const std::vector<double> y{3.0, -1.0, 0.25};
  EXPECT_EQ(solve_cholesky(cholesky_factor(Matrix::identity(3)), y), y);
}

TEST(Cholesky, ReportsFailingPivot) {
  try {
    cholesky_factor(Matrix::from_rows({{1, 0, 0}, {0, 1, 2}, {0, 2, 1}}));
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot(), 2u);
  }
}

TEST(Cholesky, RejectsNonSymmetricAndMismatchedInput) {
  EXPECT_THROW(cholesky_factor(Matrix::from_rows({{2, 1}, {0, 2}})), InvalidArgument);
  EXPECT_THROW(cholesky_factor(Matrix(2, 3)), InvalidArgument);
  const CholeskyFactor f = cholesky_factor(Matrix::identity(2));
  EXPECT_THROW(solve_cholesky(f, std::vector<double>{1.0}), InvalidArgument);
}

}  // namespace
}  // namespace ngalore
