#include "ngalore/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "ngalore/error.hpp"

namespace ngalore {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_lr(double lr) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", lr);
  return buf;
}

}  // namespace

void CompareSpec::validate() const {
  if (modes.empty()) throw InvalidArgument("compare: at least one mode is required");
  if (seeds.empty()) throw InvalidArgument("compare: at least one seed is required");
  if (budgets.empty()) throw InvalidArgument("compare: at least one budget is required");
  if (lrs.empty()) throw InvalidArgument("compare: at least one learning rate is required");
  for (std::int64_t b : budgets)
    if (b < 1) throw InvalidArgument("compare: budgets must be >= 1");
  if (eval_every < 1) throw InvalidArgument("compare: eval_every must be >= 1");
  OptimizerConfig probe = base;
  for (double lr : lrs) {
    probe.lr = lr;
    probe.validate();
  }
}

double RunOutcome::final_loss() const {
  if (result.diverged || result.records.empty()) return kInf;
  return result.final_record().val_loss;
}

double RunOutcome::best_loss() const {
  if (!result.best_index) return kInf;
  return result.records[*result.best_index].val_loss;
}

const RunOutcome* CompareResult::find(Mode mode, double lr, std::int64_t budget,
                                      std::uint64_t seed) const {
  for (const RunOutcome& r : runs)
    if (r.mode == mode && r.lr == lr && r.budget == budget && r.seed == seed) return &r;
  return nullptr;
}

const ModeSummary* CompareResult::summary(Mode mode, std::int64_t budget) const {
  for (const ModeSummary& s : summaries)
    if (s.mode == mode && s.budget == budget) return &s;
  return nullptr;
}

std::string run_csv_name(TaskKind task, const RunOutcome& run) {
  return std::string(to_string(task)) + "_" + std::string(to_string(run.mode)) + "_lr" +
         format_lr(run.lr) + "_b" + std::to_string(run.budget) + "_seed" +
         std::to_string(run.seed) + ".csv";
}

CompareResult run_compare(const CompareSpec& spec) {
  spec.validate();

  std::map<std::uint64_t, Task> tasks;
  for (std::uint64_t seed : spec.seeds) tasks.try_emplace(seed, make_task(spec.task, seed, spec.task_options));

  CompareResult out;
  for (Mode mode : spec.modes)
    for (double lr : spec.lrs)
      for (std::int64_t budget : spec.budgets)
        for (std::uint64_t seed : spec.seeds) out.runs.push_back({mode, lr, budget, seed, {}});

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < out.runs.size(); i = next++) {
      RunOutcome& run = out.runs[i];
      OptimizerConfig config = spec.base;
      config.mode = run.mode;
      config.lr = run.lr;
      TrainOptions options;
      options.budget = run.budget;
      options.eval_every = spec.eval_every;
      options.record_wall_clock = spec.record_wall_clock;
      run.result = train(tasks.at(run.seed), config, options);
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(spec.jobs, static_cast<unsigned>(out.runs.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
  }

  for (Mode mode : spec.modes) {
    for (std::int64_t budget : spec.budgets) {
      double tuned = spec.lrs.front();
      double tuned_mean = kInf;
      for (double lr : spec.lrs) {
        double sum = 0.0;
        for (std::uint64_t seed : spec.seeds) sum += out.find(mode, lr, budget, seed)->final_loss();
        const double mean = sum / static_cast<double>(spec.seeds.size());
        if (mean < tuned_mean) {
          tuned_mean = mean;
          tuned = lr;
        }
      }
      ModeSummary s{mode, budget, tuned};
      std::vector<double> best;
      double final_sum = 0.0;
      for (std::uint64_t seed : spec.seeds) {
        const RunOutcome& r = *out.find(mode, tuned, budget, seed);
        ++s.runs;
        if (r.result.diverged) ++s.diverged;
        best.push_back(r.best_loss());
        final_sum += r.final_loss();
      }
      double mean = 0.0;
      for (double b : best) mean += b;
      mean /= static_cast<double>(best.size());
      double var = 0.0;
      for (double b : best) var += (b - mean) * (b - mean);
      s.mean_best = mean;
      s.stdev_best = best.size() > 1 ? std::sqrt(var / static_cast<double>(best.size() - 1)) : 0.0;
      s.mean_final = final_sum / static_cast<double>(s.runs);
      out.summaries.push_back(s);
    }
  }

  const bool both = std::count(spec.modes.begin(), spec.modes.end(), Mode::galore) > 0 &&
                    std::count(spec.modes.begin(), spec.modes.end(), Mode::natural_galore) > 0;
  if (both) {
    for (std::int64_t budget : spec.budgets) {
      const double lr_g = out.summary(Mode::galore, budget)->tuned_lr;
      const double lr_n = out.summary(Mode::natural_galore, budget)->tuned_lr;
      WinRate w{budget};
      for (std::uint64_t seed : spec.seeds) {
        const double g = out.find(Mode::galore, lr_g, budget, seed)->final_loss();
        const double n = out.find(Mode::natural_galore, lr_n, budget, seed)->final_loss();
        if (n <= g) ++w.wins;
        ++w.total;
      }
      out.win_rates.push_back(w);
    }
  }

  if (spec.out_dir) {
    std::filesystem::create_directories(*spec.out_dir);
    for (const RunOutcome& r : out.runs) {
      write_csv(*spec.out_dir / run_csv_name(spec.task, r), r.result.records);
    }
    out.write_summary_csv(*spec.out_dir / "summary.csv");
  }
  return out;
}

std::string CompareResult::render() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %8s %10s %6s %9s %26s %14s\n", "mode", "budget",
                "tuned_lr", "runs", "diverged", "best val loss (mean±sd)", "final val mean");
  os << line;
  for (const ModeSummary& s : summaries) {
    std::snprintf(line, sizeof line, "%-16s %8lld %10g %6zu %9zu %14.6g ± %-9.3g %14.6g\n",
                  std::string(to_string(s.mode)).c_str(), static_cast<long long>(s.budget),
                  s.tuned_lr, s.runs, s.diverged, s.mean_best, s.stdev_best, s.mean_final);
    os << line;
  }
  for (const WinRate& w : win_rates) {
    std::snprintf(line, sizeof line, "budget %lld: natural-galore <= galore in %zu/%zu seeds\n",
                  static_cast<long long>(w.budget), w.wins, w.total);
    os << line;
  }
  return os.str();
}

void CompareResult::write_summary_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write summary '" + path.string() + "'");
  out << "mode,budget,tuned_lr,runs,diverged,mean_best_val_loss,stdev_best_val_loss,"
         "mean_final_val_loss,win_rate\n";
  char line[256];
  for (const ModeSummary& s : summaries) {
    std::string win;
    if (s.mode == Mode::natural_galore) {
      for (const WinRate& w : win_rates)
        if (w.budget == s.budget) {
          std::snprintf(line, sizeof line, "%.17g",
                        static_cast<double>(w.wins) / static_cast<double>(w.total));
          win = line;
        }
    }
    std::snprintf(line, sizeof line, "%s,%lld,%.17g,%zu,%zu,%.17g,%.17g,%.17g,%s\n",
                  std::string(to_string(s.mode)).c_str(), static_cast<long long>(s.budget),
                  s.tuned_lr, s.runs, s.diverged, s.mean_best, s.stdev_best, s.mean_final,
                  win.c_str());
    out << line;
  }
}

}  // namespace ngalore
