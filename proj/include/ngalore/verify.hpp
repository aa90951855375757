#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ngalore/reference.hpp"
#include "ngalore/task.hpp"

namespace ngalore::verify {

struct WoodburyStats {
  std::size_t instances = 0;
  double max_residual = 0.0;      // ||(lambda I + G G^T) g~ - g||_inf / ||g||_inf
  double max_oracle_diff = 0.0;   // vs explicit dense solve, relative to ||oracle||_inf
  double max_formula_diff = 0.0;  // vs the (lambda I + G^T G)^{-1} form
  double min_pivot = 0.0;         // smallest Cholesky pivot of S seen
};

/// Random instances with d <= 64, s <= 8, lambda cycling through
/// {1e-4, 1e-2, 1}. `correction_sign` != 1 injects a sign fault.
WoodburyStats check_woodbury(std::size_t instances, std::uint64_t seed,
                             double correction_sign = 1.0);

struct ShermanMorrisonStats {
  std::size_t instances = 0;
  double max_diff = 0.0;  // relative to ||expected||_inf
};

/// Single-column histories against g/lambda - c (c.g) / (lambda (lambda + |c|^2)),
/// which reduces to c / (lambda + |c|^2) when g = c.
ShermanMorrisonStats check_sherman_morrison(std::size_t instances, std::uint64_t seed,
                                            double correction_sign = 1.0);

struct SvdStats {
  std::size_t instances = 0;
  double max_orthonormality = 0.0;     // ||F^T F - I||_inf over both factors
  double max_exact_reconstruction = 0.0;  // relative Frobenius, planted rank <= r
  double max_sigma_diff = 0.0;         // vs Jacobi oracle, relative to sigma_1
};

SvdStats check_svd(std::size_t instances, std::uint64_t seed);

struct CholeskyStats {
  std::size_t instances = 0;
  double max_residual = 0.0;        // ||S z - y||_inf / ||y||_inf
  double max_reconstruction = 0.0;  // ||L L^T - S||_F / ||S||_F
  double min_pivot = 0.0;
};

/// Random SPD systems of order <= 16, half of them Woodbury-style
/// S = I + G^T G / lambda.
CholeskyStats check_cholesky(std::size_t instances, std::uint64_t seed);

struct TaskGradientStats {
  TaskKind task;
  reference::GradientCheck check;
};

std::vector<TaskGradientStats> check_gradients(std::uint64_t seed, const TaskOptions& options = {});

struct LadderStats {
  TaskKind task;
  std::int64_t steps = 0;
  bool bitwise_equal = false;
};

/// natural-galore with a zero-capacity history against galore.
LadderStats check_disabled_history_ladder(TaskKind task, std::int64_t steps, std::uint64_t seed,
                                          const TaskOptions& options = {});

/// Full-space adam mode against ScalarAdam, entry by entry, on a quadratic
/// with a fixed perturbation sequence. Returns the largest parameter
/// difference over the trajectory.
double check_adam_reference(std::int64_t steps, std::uint64_t seed);

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  bool flip_woodbury_sign = false;  // fault injection for harness self-test
};

std::vector<SuiteResult> run_verification(const VerifyOptions& options = {});

}  // namespace ngalore::verify
