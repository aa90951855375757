#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ngalore/autodiff.hpp"
#include "ngalore/matrix.hpp"

namespace ngalore {

enum class TaskKind : std::uint8_t { lowrank_regression, mlp_classify, char_lm };

std::string_view to_string(TaskKind kind);
/// Accepts "lowrank-regression", "mlp-classify", "char-lm".
TaskKind parse_task_kind(std::string_view text);

struct Parameter {
  std::string name;
  Matrix value;
};

/// Real-valued targets for regression, integer labels for classification.
struct Batch {
  Matrix inputs;
  Matrix targets;
  std::vector<int> labels;

  std::size_t size() const noexcept { return inputs.rows(); }
};

struct ForwardResult {
  double loss = 0.0;
  Graph graph;
};

/// Path of the corpus shipped with the source tree.
std::filesystem::path default_corpus_path();

struct TaskOptions {
  std::size_t batch_size = 128;
  std::size_t validation_size = 512;

  // lowrank-regression
  std::size_t regression_dim = 64;
  std::size_t planted_rank = 4;
  double noise_std = 0.1;

  // mlp-classify
  std::size_t classify_dim = 64;
  std::size_t classify_hidden = 64;
  std::size_t classes = 8;
  double center_scale = 0.35;

  // char-lm
  std::filesystem::path corpus_path = default_corpus_path();
  std::size_t context = 8;
  std::size_t lm_hidden = 64;
  double validation_fraction = 0.1;
};

/// A deterministic synthetic or corpus-backed learning problem.
///
/// Everything (initial parameters, validation set, and the training batch
/// drawn at each step) is a pure function of the seed, so runs are
/// reproducible and can resume from a checkpoint given only the step index.
class Task {
 public:
  TaskKind kind() const noexcept { return kind_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const TaskOptions& options() const noexcept { return options_; }

  const std::vector<Parameter>& initial_parameters() const noexcept { return initial_; }
  Batch train_batch(std::int64_t step) const;
  const Batch& validation_batch() const noexcept { return validation_; }

  /// Mean loss (squared error for regression, NLL otherwise) with the graph
  /// retained for backward(). `params` must follow initial_parameters() order.
  ForwardResult forward(const std::vector<Parameter>& params, const Batch& batch) const;
  double loss(const std::vector<Parameter>& params, const Batch& batch) const;

  // lowrank-regression
  const Matrix& planted_weights() const noexcept { return planted_; }
  /// Mean squared norm of the noise in the validation targets.
  double validation_noise_floor() const noexcept { return noise_floor_; }

  // char-lm
  const std::vector<unsigned char>& vocabulary() const noexcept { return vocabulary_; }

  friend Task make_task(TaskKind kind, std::uint64_t seed, const TaskOptions& options);

 private:
  Task() = default;

  Batch regression_batch(std::size_t count, std::uint64_t stream, std::int64_t step,
                         Matrix* noise_out) const;
  Batch mixture_batch(std::size_t count, std::uint64_t stream, std::int64_t step) const;
  Batch corpus_batch(const std::vector<std::size_t>& positions) const;

  TaskKind kind_ = TaskKind::lowrank_regression;
  std::uint64_t seed_ = 0;
  TaskOptions options_;
  std::vector<Parameter> initial_;
  Batch validation_;

  Matrix planted_;  // lowrank-regression: W* (in x out)
  double noise_floor_ = 0.0;
  Matrix centers_;  // mlp-classify: classes x dim
  std::vector<int> tokens_;  // char-lm: corpus mapped to vocabulary indices
  std::vector<unsigned char> vocabulary_;
  std::size_t split_ = 0;  // first validation position in tokens_
};

Task make_task(TaskKind kind, std::uint64_t seed, const TaskOptions& options = {});

}  // namespace ngalore
