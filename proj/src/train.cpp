#include "ngalore/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "ngalore/checkpoint.hpp"
#include "ngalore/error.hpp"

namespace ngalore {

Trainer::Trainer(const Task& task, OptimizerConfig config) : task_(&task), config_(config) {
  config_.validate();
  for (const Parameter& p : task.initial_parameters()) {
    slots_.push_back(make_slot(p.name, p.value, config_));
  }
  params_ = task.initial_parameters();
}

Trainer::Trainer(const Task& task, OptimizerConfig config, std::vector<ParamSlot> slots,
                 std::int64_t step)
    : task_(&task), config_(config), slots_(std::move(slots)), step_(step) {
  config_.validate();
  const auto& initial = task.initial_parameters();
  if (slots_.size() != initial.size()) {
    throw InvalidArgument("resume: checkpoint has " + std::to_string(slots_.size()) +
                          " slots, task expects " + std::to_string(initial.size()));
  }
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].name != initial[i].name || !slots_[i].theta.same_shape(initial[i].value)) {
      throw InvalidArgument("resume: checkpoint slot '" + slots_[i].name +
                            "' does not match the task");
    }
  }
  params_ = initial;
  sync_parameters();
}

Trainer Trainer::resume(const Task& task, OptimizerConfig config,
                        const std::filesystem::path& checkpoint) {
  Checkpoint cp = load_checkpoint(checkpoint);
  return Trainer(task, config, std::move(cp.slots), cp.step);
}

void Trainer::sync_parameters() {
  for (std::size_t i = 0; i < slots_.size(); ++i) params_[i].value = slots_[i].theta;
}

double Trainer::current_train_loss() const {
  return task_->loss(params_, task_->train_batch(step_));
}

double Trainer::validation_loss() const {
  return task_->loss(params_, task_->validation_batch());
}

double Trainer::advance() {
  const Batch batch = task_->train_batch(step_);
  ForwardResult fwd = task_->forward(params_, batch);
  const GradientMap grads = fwd.graph.backward();
  step(slots_, grads, config_, step_);
  ++step_;
  sync_parameters();
  return fwd.loss;
}

void Trainer::save(const std::filesystem::path& checkpoint) const {
  save_checkpoint(checkpoint, slots_, step_);
}

TrainResult train(const Task& task, const OptimizerConfig& config, const TrainOptions& options) {
  if (options.budget < 1) throw InvalidArgument("train: budget must be >= 1");
  if (options.eval_every < 1) throw InvalidArgument("train: eval_every must be >= 1");

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  TrainResult result;
  Trainer trainer(task, config);

  const auto diverging = [](double loss) { return !std::isfinite(loss) || loss > kDivergenceLoss; };

  for (;;) {
    const std::int64_t t = trainer.steps_done();
    if (t % options.eval_every == 0 || t == options.budget) {
      TrainRecord rec;
      rec.step = t;
      rec.train_loss = trainer.current_train_loss();
      rec.val_loss = trainer.validation_loss();
      rec.perplexity = std::exp(rec.val_loss);
      rec.wall_ms = options.record_wall_clock
                        ? std::chrono::duration<double, std::milli>(Clock::now() - start).count()
                        : 0.0;
      rec.mode = config.mode;
      rec.seed = task.seed();
      result.records.push_back(rec);
      if (diverging(rec.train_loss) || diverging(rec.val_loss)) {
        result.diverged = true;
        result.divergence_reason = "loss diverged at step " + std::to_string(t);
        break;
      }
    }
    if (t == options.budget) break;
    try {
      const double loss = trainer.advance();
      if (diverging(loss)) {
        result.diverged = true;
        result.divergence_reason = "training loss diverged at step " + std::to_string(t);
        break;
      }
    } catch (const NumericalFailure& e) {
      result.diverged = true;
      result.divergence_reason = e.what();
      break;
    }
  }

  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const double v = result.records[i].val_loss;
    if (std::isfinite(v) && (!result.best_index || v < result.records[*result.best_index].val_loss)) {
      result.best_index = i;
    }
  }
  return result;
}

void write_csv(std::ostream& out, std::span<const TrainRecord> records) {
  out << kCsvHeader << '\n';
  char line[256];
  for (const TrainRecord& r : records) {
    std::snprintf(line, sizeof line, "%lld,%.17g,%.17g,%.17g,%.3f,%s,%llu\n",
                  static_cast<long long>(r.step), r.train_loss, r.val_loss, r.perplexity,
                  r.wall_ms, std::string(to_string(r.mode)).c_str(),
                  static_cast<unsigned long long>(r.seed));
    out << line;
  }
}

void write_csv(const std::filesystem::path& path, std::span<const TrainRecord> records) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write CSV '" + path.string() + "'");
  write_csv(out, records);
}

}  // namespace ngalore
