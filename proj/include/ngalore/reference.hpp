#pragma once

// Independent reference implementations used as test oracles and by the
// `verify` command. Nothing here is on the optimizer's execution path, and
// none of it calls the kernels it is used to check.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ngalore/matrix.hpp"
#include "ngalore/task.hpp"

namespace ngalore::reference {

/// Textbook i-j-k triple loop.
Matrix naive_matmul(const Matrix& a, const Matrix& b);

/// Gaussian elimination with partial pivoting on a dense square system,
/// carried out in long double.
std::vector<double> dense_solve(Matrix a, std::vector<double> b);

struct FullSvd {
  Matrix left;                // n x k
  std::vector<double> sigma;  // k = min(n, m), non-increasing
  Matrix right;               // m x k
};

/// One-sided Jacobi SVD of an arbitrary dense matrix (exhaustive, small sizes).
FullSvd jacobi_svd(const Matrix& a);

/// Largest principal angle (radians) between the column spans of two
/// matrices with orthonormal columns and equal column counts.
double max_principal_angle(const Matrix& a, const Matrix& b);

/// (lambda I + G G^T)^{-1} g with G given column by column, by forming the
/// d x d matrix explicitly and solving densely in long double.
std::vector<double> dense_inverse_fim(std::span<const std::vector<double>> columns, double lambda,
                                      std::span<const double> g);

/// Same quantity through the small system (lambda I + G^T G) w = G^T g:
///   g~ = (g - G w) / lambda.
std::vector<double> woodbury_direct(std::span<const std::vector<double>> columns, double lambda,
                                    std::span<const double> g);

/// Scalar Adam written from the update equations, one parameter at a time.
class ScalarAdam {
 public:
  ScalarAdam(double beta1, double beta2, double epsilon, bool bias_correction, bool eps_inside_root)
      : beta1_(beta1), beta2_(beta2), eps_(epsilon), bias_(bias_correction), inside_(eps_inside_root) {}

  /// Returns the update direction for gradient g.
  double update(double g);

 private:
  double beta1_, beta2_, eps_;
  bool bias_, inside_;
  double m_ = 0.0, v_ = 0.0;
  double beta1_power_ = 1.0, beta2_power_ = 1.0;
};

struct GradientCheck {
  std::size_t checked = 0;
  double max_relative_error = 0.0;
};

/// Central finite differences of Task::loss against reverse-mode gradients
/// for up to `max_entries` parameter entries (all of them when the model is
/// small enough, otherwise an evenly strided deterministic sample).
/// Relative error is |fd - ad| / max(|fd|, |ad|, floor). With step 1e-5 the
/// difference quotient carries ~1e-10 of roundoff, so entries below the floor
/// are effectively held to an absolute bound.
GradientCheck finite_difference_check(const Task& task, const std::vector<Parameter>& params,
                                      const Batch& batch, std::size_t max_entries = 1000,
                                      double step = 1e-5, double floor = 1e-4);

}  // namespace ngalore::reference
