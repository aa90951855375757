#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ngalore/matrix.hpp"

namespace ngalore {

/// Leading-r singular triplets a ~= left * diag(sigma) * right^T.
struct CompactSVD {
  Matrix left;                // n x r, orthonormal columns
  std::vector<double> sigma;  // r values, non-increasing, >= 0
  Matrix right;               // m x r, orthonormal columns
  std::size_t iterations = 0;
};

/// Lower-triangular factor L with L * L^T equal to the factored matrix.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(Matrix lower) : lower_(std::move(lower)) {}

  const Matrix& lower() const noexcept { return lower_; }
  std::size_t dim() const noexcept { return lower_.rows(); }
  double min_pivot() const noexcept;

 private:
  Matrix lower_;
};

struct SvdOptions {
  double tolerance = 1e-10;          // relative change of the leading-r singular values
  std::size_t max_iterations = 1000;
  std::size_t oversample = 8;        // extra block columns beyond r
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double factor);
/// y += alpha * x, shapes must match.
void axpy(double alpha, const Matrix& x, Matrix& y);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs(std::span<const double> v);

/// ||a^T a - I||_inf, the largest entry-wise deviation from orthonormal columns.
double orthonormality_error(const Matrix& a);

/// Orthonormalizes the columns of `a` in place (two-pass modified
/// Gram-Schmidt). Columns that are numerically dependent on their
/// predecessors are replaced by a deterministic completion drawn from the
/// standard basis, so the result always has orthonormal columns.
void orthonormalize_columns(Matrix& a);

/// Leading-r singular triplets by block subspace iteration with a
/// Rayleigh-Ritz step. Column signs are normalized so that the
/// largest-magnitude entry of each left vector is positive.
CompactSVD compact_svd(const Matrix& a, std::size_t rank, const SvdOptions& options = {});

CholeskyFactor cholesky_factor(const Matrix& s);
/// Solves L L^T z = y by forward then backward substitution.
std::vector<double> solve_cholesky(const CholeskyFactor& factor, std::span<const double> y);

}  // namespace ngalore
