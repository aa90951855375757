#pragma once

#include <cstdint>
#include <string_view>

#include "ngalore/matrix.hpp"

namespace ngalore {

enum class EpsPlacement : std::uint8_t {
  inside_root,   // m / sqrt(v + eps)
  outside_root,  // m / (sqrt(v) + eps)
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool bias_correction = true;
  EpsPlacement eps_placement = EpsPlacement::inside_root;

  void validate() const;
};

/// First and second moments for one (possibly projected) gradient shape.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t rows, std::size_t cols, const AdamHyper& hyper);

  /// Advances the moments with `grad` and returns the update direction.
  /// Throws NumericalFailure naming `slot` if `grad` is not finite.
  Matrix update(const Matrix& grad, std::string_view slot = {});

  const Matrix& first_moment() const noexcept { return m_; }
  const Matrix& second_moment() const noexcept { return v_; }
  std::int64_t step_count() const noexcept { return step_count_; }
  const AdamHyper& hyper() const noexcept { return hyper_; }

  std::size_t allocated_elements() const noexcept { return m_.size() + v_.size(); }

  static AdamState restore(const AdamHyper& hyper, std::int64_t step_count, Matrix m, Matrix v);

 private:
  AdamHyper hyper_;
  Matrix m_;
  Matrix v_;
  std::int64_t step_count_ = 0;
};

/// Decoupled weight decay: theta * (1 - lr * rate).
void apply_weight_decay(Matrix& theta, double rate, double lr);

}  // namespace ngalore
