#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "ngalore/linalg.hpp"
#include "ngalore/matrix.hpp"

namespace ngalore {

enum class Side : std::uint8_t { left, right };

std::string_view to_string(Side side);
/// Left projection for n <= m, right otherwise; keeps the projected state at r * max(n, m).
Side default_side(std::size_t rows, std::size_t cols);

/// Low-rank subspace serving one n x m parameter.
///
/// With side=left the factor is P (n x r) and gradients project to P^T g
/// (r x m); with side=right it is Q (m x r) and gradients project to g Q
/// (n x r). The factor is recomputed from the raw gradient's compact SVD
/// every `refresh_period` steps and stays bitwise constant in between.
class Projector {
 public:
  Projector(std::size_t param_rows, std::size_t param_cols, std::size_t rank, Side side,
            std::int64_t refresh_period);

  bool initialized() const noexcept { return last_refresh_step_.has_value(); }
  bool should_refresh(std::int64_t step) const noexcept;
  void refresh(const Matrix& grad, std::int64_t step, const SvdOptions& svd = {});

  Matrix project(const Matrix& grad) const;
  Matrix project_back(const Matrix& low) const;

  std::size_t param_rows() const noexcept { return param_rows_; }
  std::size_t param_cols() const noexcept { return param_cols_; }
  std::size_t rank() const noexcept { return rank_; }
  Side side() const noexcept { return side_; }
  std::int64_t refresh_period() const noexcept { return refresh_period_; }
  std::optional<std::int64_t> last_refresh_step() const noexcept { return last_refresh_step_; }
  const Matrix& factor() const noexcept { return factor_; }

  /// Shape of project(grad).
  std::size_t projected_rows() const noexcept;
  std::size_t projected_cols() const noexcept;

  /// Rebuilds a projector from serialized state; validates shapes and semi-orthogonality.
  static Projector restore(std::size_t param_rows, std::size_t param_cols, std::size_t rank,
                           Side side, std::int64_t refresh_period,
                           std::optional<std::int64_t> last_refresh_step, Matrix factor);

 private:
  std::size_t param_rows_;
  std::size_t param_cols_;
  std::size_t rank_;
  Side side_;
  std::int64_t refresh_period_;
  std::optional<std::int64_t> last_refresh_step_;
  Matrix factor_;  // zero until first refresh
};

}  // namespace ngalore
