#include "ngalore/projector.hpp"

#include <algorithm>
#include <string>

#include "ngalore/error.hpp"

namespace ngalore {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

std::string_view to_string(Side side) { return side == Side::left ? "left" : "right"; }

Side default_side(std::size_t rows, std::size_t cols) {
  return rows <= cols ? Side::left : Side::right;
}

Projector::Projector(std::size_t param_rows, std::size_t param_cols, std::size_t rank,
                     Side side, std::int64_t refresh_period)
    : param_rows_(param_rows),
      param_cols_(param_cols),
      rank_(rank),
      side_(side),
      refresh_period_(refresh_period) {
  if (param_rows == 0 || param_cols == 0) throw InvalidArgument("projector: empty parameter");
  if (rank < 1 || rank > std::min(param_rows, param_cols)) {
    throw InvalidArgument("projector: rank " + std::to_string(rank) + " invalid for " +
                          shape_str(param_rows, param_cols) + " parameter");
  }
  if (refresh_period < 1) throw InvalidArgument("projector: refresh period must be >= 1");
  factor_ = Matrix(side == Side::left ? param_rows : param_cols, rank);
}

bool Projector::should_refresh(std::int64_t step) const noexcept {
  return !last_refresh_step_ || step - *last_refresh_step_ >= refresh_period_;
}

void Projector::refresh(const Matrix& grad, std::int64_t step, const SvdOptions& svd) {
  if (grad.rows() != param_rows_ || grad.cols() != param_cols_) {
    throw InvalidArgument("projector refresh: gradient is " + shape_str(grad.rows(), grad.cols()) +
                          ", expected " + shape_str(param_rows_, param_cols_));
  }
  CompactSVD decomposition = compact_svd(grad, rank_, svd);
  factor_ = side_ == Side::left ? std::move(decomposition.left) : std::move(decomposition.right);
  last_refresh_step_ = step;
}

Matrix Projector::project(const Matrix& grad) const {
  if (!initialized()) throw UsageError("projector: project() before first refresh");
  if (grad.rows() != param_rows_ || grad.cols() != param_cols_) {
    throw InvalidArgument("project: gradient is " + shape_str(grad.rows(), grad.cols()) +
                          ", expected " + shape_str(param_rows_, param_cols_));
  }
  return side_ == Side::left ? matmul_tn(factor_, grad) : matmul(grad, factor_);
}

Matrix Projector::project_back(const Matrix& low) const {
  if (!initialized()) throw UsageError("projector: project_back() before first refresh");
  if (low.rows() != projected_rows() || low.cols() != projected_cols()) {
    throw InvalidArgument("project_back: update is " + shape_str(low.rows(), low.cols()) +
                          ", expected " + shape_str(projected_rows(), projected_cols()));
  }
  return side_ == Side::left ? matmul(factor_, low) : matmul_nt(low, factor_);
}

std::size_t Projector::projected_rows() const noexcept {
  return side_ == Side::left ? rank_ : param_rows_;
}

std::size_t Projector::projected_cols() const noexcept {
  return side_ == Side::left ? param_cols_ : rank_;
}

Projector Projector::restore(std::size_t param_rows, std::size_t param_cols, std::size_t rank,
                             Side side, std::int64_t refresh_period,
                             std::optional<std::int64_t> last_refresh_step, Matrix factor) {
  Projector p(param_rows, param_cols, rank, side, refresh_period);
  if (!factor.same_shape(p.factor_)) {
    throw FormatError("projector restore: factor shape " + shape_str(factor.rows(), factor.cols()) +
                      " does not match " + shape_str(p.factor_.rows(), p.factor_.cols()));
  }
  if (last_refresh_step && orthonormality_error(factor) > 1e-8) {
    throw FormatError("projector restore: factor is not semi-orthogonal");
  }
  p.factor_ = std::move(factor);
  p.last_refresh_step_ = last_refresh_step;
  return p;
}

}  // namespace ngalore
