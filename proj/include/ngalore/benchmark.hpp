#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ngalore/optimizer.hpp"
#include "ngalore/task.hpp"
#include "ngalore/train.hpp"

namespace ngalore {

/// A grid of training runs: every (mode, lr, budget, seed) combination.
struct CompareSpec {
  TaskKind task = TaskKind::lowrank_regression;
  std::vector<Mode> modes{Mode::galore, Mode::natural_galore};
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::int64_t> budgets{250};
  std::vector<double> lrs{1e-3};  // per mode, the grid point with the lowest mean final loss wins
  OptimizerConfig base;           // mode and lr are overridden per run
  TaskOptions task_options;
  std::int64_t eval_every = 25;
  bool record_wall_clock = false;
  unsigned jobs = 1;
  std::optional<std::filesystem::path> out_dir;  // per-run CSVs and summary.csv

  void validate() const;
};

struct RunOutcome {
  Mode mode;
  double lr;
  std::int64_t budget;
  std::uint64_t seed;
  TrainResult result;

  /// Final validation loss, +inf for a diverged run.
  double final_loss() const;
  double best_loss() const;
};

struct ModeSummary {
  Mode mode;
  std::int64_t budget;
  double tuned_lr;
  std::size_t runs = 0;
  std::size_t diverged = 0;
  double mean_best = 0.0;
  double stdev_best = 0.0;
  double mean_final = 0.0;
};

/// natural-galore against galore, seed by seed, each at its tuned lr.
struct WinRate {
  std::int64_t budget;
  std::size_t wins = 0;  // natural-galore final loss <= galore final loss
  std::size_t total = 0;
};

struct CompareResult {
  std::vector<RunOutcome> runs;
  std::vector<ModeSummary> summaries;
  std::vector<WinRate> win_rates;  // empty unless both galore modes ran

  const RunOutcome* find(Mode mode, double lr, std::int64_t budget, std::uint64_t seed) const;
  const ModeSummary* summary(Mode mode, std::int64_t budget) const;
  std::string render() const;
  void write_summary_csv(const std::filesystem::path& path) const;
};

std::string run_csv_name(TaskKind task, const RunOutcome& run);

CompareResult run_compare(const CompareSpec& spec);

}  // namespace ngalore
