#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ngalore/matrix.hpp"

namespace ngalore {

/// Auxiliary storage used by one apply_inverse_fim call, in doubles.
struct FimWorkspace {
  std::size_t elements = 0;
  double min_pivot = 0.0;  // smallest Cholesky pivot of S, 0 when history was empty
};

/// Ring buffer of the last `capacity` vectorized low-rank gradients (the
/// columns of G) together with the Tikhonov damping lambda. Defines the
/// empirical Fisher estimate F = lambda I + G G^T.
///
/// Storage for all `capacity` columns is reserved as soon as the column
/// length is known, so the footprint is constant for the life of the slot.
class GradHistory {
 public:
  /// `dim` may be 0 to defer sizing until the first push.
  GradHistory(std::size_t capacity, double lambda, std::size_t dim = 0);

  void push(const Matrix& low_rank_grad);

  /// Returns F^{-1} vec(g) reshaped like g, computed through the s x s
  /// system S z = y with S = I + G^T G / lambda and y = G^T g:
  ///   g~ = g / lambda - G z / lambda^2.
  /// With no stored columns the gradient is returned unchanged.
  Matrix apply_inverse_fim(const Matrix& low_rank_grad, FimWorkspace* workspace = nullptr) const;

  void reset() noexcept;

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  double lambda() const noexcept { return lambda_; }
  bool empty() const noexcept { return count_ == 0; }

  /// i = 0 is the oldest stored column.
  std::span<const double> column(std::size_t i) const;

  /// Elements owned by the ring buffer (capacity * dim once sized).
  std::size_t allocated_elements() const noexcept { return storage_.size(); }

  // Raw state for checkpointing.
  std::size_t head() const noexcept { return head_; }
  std::span<const double> storage() const noexcept { return storage_; }
  static GradHistory restore(std::size_t capacity, double lambda, std::size_t dim,
                             std::size_t head, std::size_t count, std::vector<double> storage);

 private:
  std::size_t slot_index(std::size_t i) const noexcept { return (head_ + i) % capacity_; }

  std::size_t capacity_;
  double lambda_;
  std::size_t dim_;
  std::size_t head_ = 0;   // index of the oldest column
  std::size_t count_ = 0;
  std::vector<double> storage_;  // capacity_ blocks of dim_ doubles
};

namespace detail {
// `correction_sign` multiplies the G z term; +1 is the correct transform.
// Exposed so the verify command can prove that its checks detect a sign fault.
Matrix apply_inverse_fim_signed(const GradHistory& history, const Matrix& low_rank_grad,
                                double correction_sign, FimWorkspace* workspace);
}  // namespace detail

}  // namespace ngalore
