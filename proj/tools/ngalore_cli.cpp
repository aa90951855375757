// ngalore: verify, train, compare and memreport commands.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ngalore/benchmark.hpp"
#include "ngalore/error.hpp"
#include "ngalore/memory.hpp"
#include "ngalore/optimizer.hpp"
#include "ngalore/train.hpp"
#include "ngalore/verify.hpp"

namespace {

using namespace ngalore;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

constexpr const char* kOutDirEnv = "NGALORE_OUT_DIR";

struct RunFlags {
  std::string task = "lowrank-regression";
  std::vector<std::string> modes{"natural-galore"};
  std::string seeds = "1";
  std::vector<std::int64_t> budgets{250};
  std::vector<double> lrs{1e-3};
  std::size_t rank = 8;
  std::int64_t refresh_period = 200;
  double lambda = 1e-2;
  std::size_t history = 4;
  double alpha = 1.0;
  double weight_decay = 0.0;
  std::int64_t eval_every = 25;
  std::string history_on_refresh = "clear";
  std::string eps_placement = "inside";
  bool no_bias_correction = false;
  std::string out;
  std::string corpus;
  std::string config;
  unsigned jobs = 1;
  bool timing = false;
};

void add_run_options(CLI::App& cmd, RunFlags& f, bool multi) {
  cmd.add_option("--task", f.task, "lowrank-regression | mlp-classify | char-lm")->capture_default_str();
  auto* mode = cmd.add_option("--mode", f.modes, "adam | galore | natural-galore")->delimiter(',');
  auto* budget = cmd.add_option("--budget", f.budgets, "optimizer steps per run")->delimiter(',');
  auto* lr = cmd.add_option("--lr", f.lrs, "learning rate")->delimiter(',');
  if (multi) {
    mode->description("comma-separated modes to compare");
    budget->description("comma-separated step budgets");
    lr->description("comma-separated lr grid, tuned per mode");
  } else {
    mode->expected(1);
    budget->expected(1);
    lr->expected(1);
  }
  cmd.add_option("--seeds", f.seeds, "N for seeds 0..N-1, or a comma-separated list")->capture_default_str();
  cmd.add_option("--rank", f.rank, "projection rank r")->capture_default_str();
  cmd.add_option("--refresh-period", f.refresh_period, "steps between projector refreshes")->capture_default_str();
  cmd.add_option("--lambda", f.lambda, "Tikhonov damping of the empirical Fisher")->capture_default_str();
  cmd.add_option("--history", f.history, "gradient history length s")->capture_default_str();
  cmd.add_option("--alpha", f.alpha, "update scale")->capture_default_str();
  cmd.add_option("--weight-decay", f.weight_decay, "decoupled weight decay rate")->capture_default_str();
  cmd.add_option("--eval-every", f.eval_every, "validation cadence in steps")->capture_default_str();
  cmd.add_option("--history-on-refresh", f.history_on_refresh, "clear | keep")->capture_default_str();
  cmd.add_option("--eps-placement", f.eps_placement, "inside | outside the square root")->capture_default_str();
  cmd.add_flag("--no-bias-correction", f.no_bias_correction, "use uncorrected Adam moments");
  cmd.add_option("--out", f.out, std::string("output directory (default $") + kOutDirEnv + " or ./ngalore-out)");
  cmd.add_option("--corpus", f.corpus, "char-lm corpus file");
  cmd.add_option("--config", f.config, "key=value file; command-line flags take precedence");
  if (multi) {
    cmd.add_option("--jobs", f.jobs, "worker threads")->capture_default_str();
    cmd.add_flag("--timing", f.timing, "record wall-clock time in the CSVs");
  }
}

// Fills options that were not given on the command line from a key=value file.
void apply_config_file(CLI::App& cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "config") continue;
    CLI::Option* opt = nullptr;
    try {
      opt = cmd.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (opt->count() > 0) continue;
    opt->add_result(opt->get_type_size() == 0 ? (value.empty() ? "true" : value) : value);
    opt->run_callback();
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  try {
    if (text.find(',') == std::string::npos) {
      const auto count = std::stoull(text);
      if (count == 0) throw InvalidArgument("--seeds must be positive");
      for (std::uint64_t s = 0; s < count; ++s) seeds.push_back(s);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) seeds.push_back(std::stoull(item));
      }
    }
  } catch (const std::logic_error&) {
    throw InvalidArgument("invalid --seeds value '" + text + "'");
  }
  if (seeds.empty()) throw InvalidArgument("--seeds lists no seeds");
  return seeds;
}

OptimizerConfig to_config(const RunFlags& f) {
  OptimizerConfig c;
  c.mode = parse_mode(f.modes.front());
  c.lr = f.lrs.front();
  c.rank = f.rank;
  c.refresh_period = f.refresh_period;
  c.lambda = f.lambda;
  c.history = f.history;
  c.alpha = f.alpha;
  c.weight_decay = f.weight_decay;
  c.adam.bias_correction = !f.no_bias_correction;
  if (f.eps_placement == "inside") {
    c.adam.eps_placement = EpsPlacement::inside_root;
  } else if (f.eps_placement == "outside") {
    c.adam.eps_placement = EpsPlacement::outside_root;
  } else {
    throw InvalidArgument("--eps-placement must be inside or outside");
  }
  if (f.history_on_refresh == "clear") {
    c.history_on_refresh = HistoryOnRefresh::clear;
  } else if (f.history_on_refresh == "keep") {
    c.history_on_refresh = HistoryOnRefresh::keep;
  } else {
    throw InvalidArgument("--history-on-refresh must be clear or keep");
  }
  c.validate();
  return c;
}

TaskOptions to_task_options(const RunFlags& f) {
  TaskOptions o;
  if (!f.corpus.empty()) o.corpus_path = f.corpus;
  return o;
}

std::filesystem::path output_dir(const RunFlags& f) {
  if (!f.out.empty()) return f.out;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "ngalore-out";
}

int cmd_verify(bool inject_fault) {
  verify::VerifyOptions options;
  options.flip_woodbury_sign = inject_fault;
  bool all = true;
  for (const verify::SuiteResult& r : verify::run_verification(options)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    all = all && r.passed;
  }
  std::cout << (all ? "all suites passed" : "verification FAILED") << '\n';
  return all ? kExitOk : kExitFailure;
}

int cmd_train(const RunFlags& f) {
  const OptimizerConfig config = to_config(f);
  const TaskKind kind = parse_task_kind(f.task);
  const auto dir = output_dir(f);
  std::filesystem::create_directories(dir);
  TrainOptions options;
  options.budget = f.budgets.front();
  options.eval_every = f.eval_every;
  bool diverged = false;
  for (std::uint64_t seed : parse_seeds(f.seeds)) {
    const Task task = make_task(kind, seed, to_task_options(f));
    const TrainResult result = train(task, config, options);
    const auto path = dir / (std::string(to_string(kind)) + "_" + std::string(to_string(config.mode)) +
                             "_seed" + std::to_string(seed) + ".csv");
    write_csv(path, result.records);
    const TrainRecord& last = result.final_record();
    std::cout << "seed " << seed << ": final val loss " << last.val_loss;
    if (result.best_index) {
      const TrainRecord& best = result.records[*result.best_index];
      std::cout << ", best val perplexity " << best.perplexity << " at step " << best.step;
    }
    if (result.diverged) std::cout << " [diverged: " << result.divergence_reason << "]";
    std::cout << " -> " << path.string() << '\n';
    diverged = diverged || result.diverged;
  }
  return diverged ? kExitFailure : kExitOk;
}

int cmd_compare(const RunFlags& f) {
  CompareSpec spec;
  spec.task = parse_task_kind(f.task);
  spec.modes.clear();
  for (const std::string& m : f.modes) spec.modes.push_back(parse_mode(m));
  spec.seeds = parse_seeds(f.seeds);
  spec.budgets = f.budgets;
  spec.lrs = f.lrs;
  RunFlags first = f;
  first.modes = {f.modes.front()};
  spec.base = to_config(first);
  spec.task_options = to_task_options(f);
  spec.eval_every = f.eval_every;
  spec.record_wall_clock = f.timing;
  spec.jobs = f.jobs;
  spec.out_dir = output_dir(f);
  const CompareResult result = run_compare(spec);
  std::cout << result.render();
  std::cout << "wrote " << result.runs.size() << " run CSVs and summary.csv to "
            << spec.out_dir->string() << '\n';
  return kExitOk;
}

int cmd_memreport(std::size_t rows, std::size_t cols, std::size_t rank, std::size_t history,
                  const std::string& mode, bool ini) {
  OptimizerConfig config;
  config.mode = parse_mode(mode);
  config.rank = rank;
  config.history = history;
  if (rows == 0 || cols == 0) throw InvalidArgument("--rows and --cols must be positive");
  if (rank == 0 || rank > std::min(rows, cols)) {
    throw InvalidArgument("--rank must lie in [1, min(rows, cols)]");
  }
  std::vector<ParamSlot> slots;
  slots.push_back(make_slot("weight", Matrix(rows, cols), config));
  const MemoryReport report = memory_report(slots);
  std::cout << (ini ? report.to_text() : report.render());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Natural GaLore optimizer: verification, training and memory accounting"};
  app.require_subcommand(1);

  auto* verify_cmd = app.add_subcommand("verify", "run the invariant suites");
  std::string fault;
  verify_cmd->add_option("--inject-fault", fault, "self-test hook: woodbury-sign")
      ->check(CLI::IsMember({"woodbury-sign"}))
      ->group("");

  RunFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train one task with one optimizer mode");
  add_run_options(*train_cmd, train_flags, false);

  RunFlags compare_flags;
  compare_flags.modes = {"galore", "natural-galore"};
  compare_flags.seeds = "10";
  auto* compare_cmd = app.add_subcommand("compare", "multi-mode, multi-seed benchmark");
  add_run_options(*compare_cmd, compare_flags, true);

  std::size_t rows = 1024, cols = 1024, rank = 128, history = 4;
  std::string mode = "natural-galore";
  bool ini = false;
  auto* mem_cmd = app.add_subcommand("memreport", "optimizer memory accounting for one matrix");
  mem_cmd->add_option("--rows", rows, "parameter rows n")->capture_default_str();
  mem_cmd->add_option("--cols", cols, "parameter columns m")->capture_default_str();
  mem_cmd->add_option("--rank", rank, "projection rank r")->capture_default_str();
  mem_cmd->add_option("--history", history, "gradient history length s")->capture_default_str();
  mem_cmd->add_option("--mode", mode, "adam | galore | natural-galore")->capture_default_str();
  mem_cmd->add_flag("--ini", ini, "emit [section] key=value text instead of a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*verify_cmd) return cmd_verify(!fault.empty());
    if (*train_cmd) {
      if (!train_flags.config.empty()) apply_config_file(*train_cmd, train_flags.config);
      return cmd_train(train_flags);
    }
    if (*compare_cmd) {
      if (!compare_flags.config.empty()) apply_config_file(*compare_cmd, compare_flags.config);
      return cmd_compare(compare_flags);
    }
    if (*mem_cmd) return cmd_memreport(rows, cols, rank, history, mode, ini);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
