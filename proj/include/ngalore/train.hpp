#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ngalore/optimizer.hpp"
#include "ngalore/task.hpp"

namespace ngalore {

struct TrainRecord {
  std::int64_t step = 0;  // optimizer steps completed
  double train_loss = 0.0;
  double val_loss = 0.0;
  double perplexity = 0.0;  // exp(val_loss)
  double wall_ms = 0.0;
  Mode mode = Mode::adam;
  std::uint64_t seed = 0;
};

struct TrainOptions {
  std::int64_t budget = 100;
  std::int64_t eval_every = 25;
  bool record_wall_clock = true;  // false writes wall_ms = 0 for byte-identical output
};

struct TrainResult {
  std::vector<TrainRecord> records;
  bool diverged = false;
  std::string divergence_reason;
  std::optional<std::size_t> best_index;  // record with the lowest validation loss

  const TrainRecord& final_record() const { return records.back(); }
};

/// Loss above which a run is declared divergent.
inline constexpr double kDivergenceLoss = 1e6;

/// Owns the parameters and optimizer state of one run on one task.
class Trainer {
 public:
  Trainer(const Task& task, OptimizerConfig config);
  static Trainer resume(const Task& task, OptimizerConfig config,
                        const std::filesystem::path& checkpoint);

  /// Loss on the training batch for the current step, without updating.
  double current_train_loss() const;
  double validation_loss() const;

  /// Forward, backward and one optimizer step on the current batch.
  /// Returns the pre-update training loss.
  double advance();

  std::int64_t steps_done() const noexcept { return step_; }
  std::span<const ParamSlot> slots() const noexcept { return slots_; }
  const std::vector<Parameter>& parameters() const noexcept { return params_; }
  const OptimizerConfig& config() const noexcept { return config_; }

  void save(const std::filesystem::path& checkpoint) const;

 private:
  Trainer(const Task& task, OptimizerConfig config, std::vector<ParamSlot> slots,
          std::int64_t step);
  void sync_parameters();

  const Task* task_;
  OptimizerConfig config_;
  std::vector<ParamSlot> slots_;
  std::vector<Parameter> params_;
  std::int64_t step_ = 0;
};

/// Runs exactly `options.budget` optimizer steps, recording at step 0, every
/// `eval_every` steps, and at the end. Stops early (diverged = true) if the
/// loss becomes non-finite or exceeds kDivergenceLoss.
TrainResult train(const Task& task, const OptimizerConfig& config, const TrainOptions& options);

inline constexpr const char* kCsvHeader = "step,train_loss,val_loss,perplexity,wall_ms,mode,seed";

void write_csv(std::ostream& out, std::span<const TrainRecord> records);
void write_csv(const std::filesystem::path& path, std::span<const TrainRecord> records);

}  // namespace ngalore
