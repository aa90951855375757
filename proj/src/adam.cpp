#include "ngalore/adam.hpp"

#include <cmath>
#include <string>

#include "ngalore/error.hpp"

namespace ngalore {

void AdamHyper::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("adam: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("adam: beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("adam: epsilon must be positive");
}

AdamState::AdamState(std::size_t rows, std::size_t cols, const AdamHyper& hyper)
    : hyper_(hyper), m_(rows, cols), v_(rows, cols) {
  hyper_.validate();
}

Matrix AdamState::update(const Matrix& grad, std::string_view slot) {
  if (!grad.same_shape(m_)) {
    throw InvalidArgument("adam update for '" + std::string(slot) + "': gradient shape " +
                          std::to_string(grad.rows()) + "x" + std::to_string(grad.cols()) +
                          " does not match state " + std::to_string(m_.rows()) + "x" +
                          std::to_string(m_.cols()));
  }
  if (!grad.all_finite()) {
    throw NumericalFailure("adam update for '" + std::string(slot) +
                           "': gradient contains NaN or Inf");
  }
  ++step_count_;
  const double b1 = hyper_.beta1;
  const double b2 = hyper_.beta2;
  double m_scale = 1.0;
  double v_scale = 1.0;
  if (hyper_.bias_correction) {
    const auto t = static_cast<double>(step_count_);
    m_scale = 1.0 / (1.0 - std::pow(b1, t));
    v_scale = 1.0 / (1.0 - std::pow(b2, t));
  }
  const bool inside = hyper_.eps_placement == EpsPlacement::inside_root;
  const double eps = hyper_.epsilon;

  Matrix out(grad.rows(), grad.cols());
  auto g = grad.data();
  auto m = m_.data();
  auto v = v_.data();
  auto u = out.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double m_hat = m[i] * m_scale;
    const double v_hat = v[i] * v_scale;
    u[i] = inside ? m_hat / std::sqrt(v_hat + eps) : m_hat / (std::sqrt(v_hat) + eps);
  }
  return out;
}

AdamState AdamState::restore(const AdamHyper& hyper, std::int64_t step_count, Matrix m,
                             Matrix v) {
  if (!m.same_shape(v) || step_count < 0) {
    throw FormatError("adam restore: inconsistent moment state");
  }
  AdamState s;
  s.hyper_ = hyper;
  s.hyper_.validate();
  s.m_ = std::move(m);
  s.v_ = std::move(v);
  s.step_count_ = step_count;
  return s;
}

void apply_weight_decay(Matrix& theta, double rate, double lr) {
  if (rate < 0.0) throw InvalidArgument("weight decay rate must be non-negative");
  if (rate == 0.0) return;
  const double keep = 1.0 - lr * rate;
  for (double& x : theta.data()) x *= keep;
}

}  // namespace ngalore
