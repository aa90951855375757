#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ngalore/adam.hpp"
#include "ngalore/linalg.hpp"
#include "ngalore/matrix.hpp"
#include "ngalore/natgrad.hpp"
#include "ngalore/projector.hpp"

namespace ngalore {

enum class Mode : std::uint8_t {
  adam,            // full-space Adam
  galore,          // projected Adam
  natural_galore,  // projected Adam on inverse-Fisher-transformed gradients
};

std::string_view to_string(Mode mode);
/// Accepts "adam", "galore", "natural-galore".
Mode parse_mode(std::string_view text);

/// What happens to the gradient history when a projector refresh changes the
/// subspace its columns were expressed in.
enum class HistoryOnRefresh : std::uint8_t { clear, keep };

struct OptimizerConfig {
  Mode mode = Mode::natural_galore;
  double lr = 1e-3;
  std::size_t rank = 8;
  std::int64_t refresh_period = 200;
  double lambda = 1e-2;
  std::size_t history = 4;  // s, columns of G
  double alpha = 1.0;
  double weight_decay = 0.0;
  AdamHyper adam;
  std::size_t min_dim_for_projection = 2;
  std::optional<Side> side;  // unset: per-slot default_side()
  HistoryOnRefresh history_on_refresh = HistoryOnRefresh::clear;
  SvdOptions svd;

  void validate() const;
};

struct SlotConfig {
  std::size_t rank = 0;  // 0 for full-space slots
  std::int64_t refresh_period = 0;
  double lambda = 0.0;
  std::size_t history = 0;
  double alpha = 1.0;
};

/// One named parameter matrix and every piece of optimizer state it owns.
struct ParamSlot {
  std::string name;
  Matrix theta;
  /// Input to the Adam stage of the last step: the raw gradient for
  /// full-space slots, the projected gradient otherwise.
  Matrix grad_buffer;
  std::optional<Projector> projector;  // absent => full-space Adam
  std::optional<GradHistory> history;  // absent => no Fisher transform
  AdamState adam;
  SlotConfig config;
};

ParamSlot make_slot(std::string name, Matrix theta, const OptimizerConfig& config);

using GradientMap = std::map<std::string, Matrix, std::less<>>;

/// One optimizer step over every slot:
///   refresh projector if due, project, push history and apply the inverse
///   Fisher transform (natural-galore), Adam, project back, update theta,
///   then decoupled weight decay.
/// All gradients are validated before any slot is mutated.
void step(std::span<ParamSlot> slots, const GradientMap& grads, const OptimizerConfig& config,
          std::int64_t step_index);

}  // namespace ngalore
