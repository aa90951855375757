#include "ngalore/natgrad.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ngalore/error.hpp"
#include "ngalore/linalg.hpp"

namespace ngalore {

GradHistory::GradHistory(std::size_t capacity, double lambda, std::size_t dim)
    : capacity_(capacity), lambda_(lambda), dim_(dim) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("grad history: lambda must be positive and finite");
  }
  storage_.assign(capacity_ * dim_, 0.0);
}

void GradHistory::push(const Matrix& low_rank_grad) {
  if (capacity_ == 0) return;
  if (dim_ == 0) {
    dim_ = low_rank_grad.size();
    storage_.assign(capacity_ * dim_, 0.0);
  }
  if (low_rank_grad.size() != dim_) {
    throw InvalidArgument("grad history push: vector length " +
                          std::to_string(low_rank_grad.size()) + ", expected " +
                          std::to_string(dim_));
  }
  std::size_t target;
  if (count_ < capacity_) {
    target = slot_index(count_);
    ++count_;
  } else {
    target = head_;
    head_ = (head_ + 1) % capacity_;
  }
  auto src = low_rank_grad.data();
  std::copy(src.begin(), src.end(), storage_.begin() + static_cast<std::ptrdiff_t>(target * dim_));
}

std::span<const double> GradHistory::column(std::size_t i) const {
  if (i >= count_) throw InvalidArgument("grad history: column index out of range");
  return {storage_.data() + slot_index(i) * dim_, dim_};
}

void GradHistory::reset() noexcept {
  head_ = 0;
  count_ = 0;
}

Matrix GradHistory::apply_inverse_fim(const Matrix& low_rank_grad, FimWorkspace* workspace) const {
  return detail::apply_inverse_fim_signed(*this, low_rank_grad, 1.0, workspace);
}

GradHistory GradHistory::restore(std::size_t capacity, double lambda, std::size_t dim,
                                 std::size_t head, std::size_t count,
                                 std::vector<double> storage) {
  GradHistory h(capacity, lambda, 0);
  if (storage.size() != capacity * dim || count > capacity || (capacity > 0 && head >= capacity) ||
      (capacity == 0 && (head != 0 || count != 0))) {
    throw FormatError("grad history restore: inconsistent ring buffer state");
  }
  h.dim_ = dim;
  h.head_ = head;
  h.count_ = count;
  h.storage_ = std::move(storage);
  return h;
}

namespace detail {

Matrix apply_inverse_fim_signed(const GradHistory& history, const Matrix& low_rank_grad,
                                double correction_sign, FimWorkspace* workspace) {
  if (workspace) *workspace = {};
  const std::size_t s = history.size();
  if (s == 0) return low_rank_grad;

  const std::size_t d = history.dim();
  if (low_rank_grad.size() != d) {
    throw InvalidArgument("apply_inverse_fim: gradient length " +
                          std::to_string(low_rank_grad.size()) + ", history holds " +
                          std::to_string(d));
  }
  const double lambda = history.lambda();
  auto g = low_rank_grad.data();

  // S = I + G^T G / lambda, s x s.
  Matrix gram(s, s);
  for (std::size_t i = 0; i < s; ++i) {
    auto ci = history.column(i);
    for (std::size_t j = 0; j <= i; ++j) {
      auto cj = history.column(j);
      double cc = 0.0;
      for (std::size_t t = 0; t < d; ++t) cc += ci[t] * cj[t];
      const double entry = (i == j ? 1.0 : 0.0) + cc / lambda;
      gram(i, j) = entry;
      gram(j, i) = entry;
    }
  }

  CholeskyFactor factor = [&] {
    try {
      return cholesky_factor(gram);
    } catch (const NotPositiveDefinite& e) {
      throw NumericalFailure(std::string("apply_inverse_fim: S is not positive definite, history "
                                         "is contaminated: ") +
                             e.what());
    } catch (const InvalidArgument& e) {
      throw NumericalFailure(std::string("apply_inverse_fim: ") + e.what());
    }
  }();
  // g / lambda - G z / lambda^2 with S z = G^T rhs.
  const auto woodbury = [&](std::span<const double> rhs, std::span<double> dst) {
    std::vector<double> proj(s, 0.0);
    for (std::size_t i = 0; i < s; ++i) {
      auto ci = history.column(i);
      double dot = 0.0;
      for (std::size_t t = 0; t < d; ++t) dot += ci[t] * rhs[t];
      proj[i] = dot;
    }
    const std::vector<double> z = solve_cholesky(factor, proj);
    const double inv_lambda = 1.0 / lambda;
    const double inv_lambda_sq = inv_lambda * inv_lambda;
    for (std::size_t t = 0; t < d; ++t) dst[t] = inv_lambda * rhs[t];
    for (std::size_t i = 0; i < s; ++i) {
      auto ci = history.column(i);
      const double coeff = correction_sign * inv_lambda_sq * z[i];
      for (std::size_t t = 0; t < d; ++t) dst[t] -= coeff * ci[t];
    }
  };

  Matrix out(low_rank_grad.rows(), low_rank_grad.cols());
  auto result = out.data();
  woodbury(g, result);

  // One refinement step. The output is a difference of terms up to
  // (1 + |G|^2 / lambda) times larger than itself, so the residual is
  // accumulated in extended precision.
  std::vector<double> residual(d);
  {
    std::vector<long double> gt(s, 0.0L);
    for (std::size_t i = 0; i < s; ++i) {
      auto ci = history.column(i);
      for (std::size_t t = 0; t < d; ++t)
        gt[i] += static_cast<long double>(ci[t]) * static_cast<long double>(result[t]);
    }
    for (std::size_t t = 0; t < d; ++t) {
      long double r = static_cast<long double>(g[t]) -
                      static_cast<long double>(lambda) * static_cast<long double>(result[t]);
      for (std::size_t i = 0; i < s; ++i)
        r -= static_cast<long double>(history.column(i)[t]) * gt[i];
      residual[t] = static_cast<double>(r);
    }
  }
  std::vector<double> delta(d);
  woodbury(residual, delta);
  for (std::size_t t = 0; t < d; ++t) result[t] += delta[t];
  if (!out.all_finite()) throw NumericalFailure("apply_inverse_fim: non-finite result");

  if (workspace) {
    // G^T rhs, z, S, L, residual, correction and the output vector.
    workspace->elements = 2 * s + gram.size() + factor.lower().size() + 2 * d + out.size();
    workspace->min_pivot = factor.min_pivot();
  }
  return out;
}

}  // namespace detail

}  // namespace ngalore
