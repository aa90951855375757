#include "ngalore/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "ngalore/error.hpp"

namespace ngalore {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::adam:
      return "adam";
    case Mode::galore:
      return "galore";
    case Mode::natural_galore:
      return "natural-galore";
  }
  return "unknown";
}

Mode parse_mode(std::string_view text) {
  if (text == "adam") return Mode::adam;
  if (text == "galore") return Mode::galore;
  if (text == "natural-galore") return Mode::natural_galore;
  throw InvalidArgument("unknown optimizer mode '" + std::string(text) +
                        "' (expected adam, galore or natural-galore)");
}

void OptimizerConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("lr must be finite and >= 0");
  if (rank < 1) throw InvalidArgument("rank must be >= 1");
  if (refresh_period < 1) throw InvalidArgument("refresh period must be >= 1");
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (!(alpha >= 0.0)) throw InvalidArgument("alpha must be >= 0");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight decay must be >= 0");
  adam.validate();
}

ParamSlot make_slot(std::string name, Matrix theta, const OptimizerConfig& config) {
  config.validate();
  if (theta.empty()) throw InvalidArgument("slot '" + name + "': empty parameter");
  const std::size_t n = theta.rows();
  const std::size_t m = theta.cols();
  const bool projected =
      config.mode != Mode::adam && std::min(n, m) >= config.min_dim_for_projection;

  ParamSlot slot;
  slot.name = std::move(name);
  slot.config.alpha = config.alpha;
  if (projected) {
    const std::size_t rank = std::min(config.rank, std::min(n, m));
    const Side side = config.side.value_or(default_side(n, m));
    slot.projector.emplace(n, m, rank, side, config.refresh_period);
    const std::size_t pr = slot.projector->projected_rows();
    const std::size_t pc = slot.projector->projected_cols();
    if (config.mode == Mode::natural_galore) slot.history.emplace(config.history, config.lambda, pr * pc);
    slot.adam = AdamState(pr, pc, config.adam);
    slot.grad_buffer = Matrix(pr, pc);
    slot.config.rank = rank;
    slot.config.refresh_period = config.refresh_period;
    slot.config.lambda = config.lambda;
    slot.config.history = slot.history ? config.history : 0;
  } else {
    slot.adam = AdamState(n, m, config.adam);
    slot.grad_buffer = Matrix(n, m);
  }
  slot.theta = std::move(theta);
  return slot;
}

void step(std::span<ParamSlot> slots, const GradientMap& grads, const OptimizerConfig& config,
          std::int64_t step_index) {
  config.validate();
  std::set<std::string_view> seen;
  for (const ParamSlot& slot : slots) {
    if (!seen.insert(slot.name).second) {
      throw InvalidArgument("duplicate slot name '" + slot.name + "'");
    }
    auto it = grads.find(slot.name);
    if (it == grads.end()) throw InvalidArgument("missing gradient for slot '" + slot.name + "'");
    if (!it->second.same_shape(slot.theta)) {
      throw InvalidArgument("gradient for slot '" + slot.name + "' has the wrong shape");
    }
    if (!it->second.all_finite()) {
      throw NumericalFailure("non-finite gradient for slot '" + slot.name + "' at step " +
                             std::to_string(step_index));
    }
  }

  for (ParamSlot& slot : slots) {
    const Matrix& grad = grads.find(slot.name)->second;
    Matrix delta;
    if (slot.projector) {
      Projector& projector = *slot.projector;
      if (projector.should_refresh(step_index)) {
        projector.refresh(grad, step_index, config.svd);
        if (slot.history && config.history_on_refresh == HistoryOnRefresh::clear) {
          slot.history->reset();
        }
      }
      slot.grad_buffer = projector.project(grad);
      Matrix direction;
      if (slot.history) {
        slot.history->push(slot.grad_buffer);
        direction = slot.history->apply_inverse_fim(slot.grad_buffer);
      }
      const Matrix u = slot.adam.update(slot.history ? direction : slot.grad_buffer, slot.name);
      delta = projector.project_back(u);
    } else {
      slot.grad_buffer = grad;
      delta = slot.adam.update(grad, slot.name);
    }
    axpy(-config.lr * slot.config.alpha, delta, slot.theta);
    apply_weight_decay(slot.theta, config.weight_decay, config.lr);
    if (!slot.theta.all_finite()) {
      throw NumericalFailure("parameter '" + slot.name + "' became non-finite at step " +
                             std::to_string(step_index));
    }
  }
}

}  // namespace ngalore
