#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ngalore/benchmark.hpp"
#include "ngalore/error.hpp"

namespace ngalore {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

CompareSpec small_spec() {
  CompareSpec spec;
  spec.task = TaskKind::mlp_classify;
  spec.seeds = {0, 1};
  spec.budgets = {10, 20};
  spec.lrs = {1e-3, 1e-2};
  spec.eval_every = 5;
  return spec;
}

TEST(Compare, GridShapeAndSummaries) {
  const CompareResult r = run_compare(small_spec());
  EXPECT_EQ(r.runs.size(), 2u * 2u * 2u * 2u);
  EXPECT_EQ(r.summaries.size(), 4u);
  ASSERT_EQ(r.win_rates.size(), 2u);
  for (const WinRate& w : r.win_rates) {
    EXPECT_EQ(w.total, 2u);
    EXPECT_LE(w.wins, w.total);
  }
  const ModeSummary* s = r.summary(Mode::galore, 20);
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(s->runs, 2u);
  const RunOutcome* run = r.find(Mode::galore, s->tuned_lr, 20, 1);
  ASSERT_NE(run, nullptr);
  EXPECT_EQ(run->result.final_record().step, 20);
  EXPECT_NE(r.render().find("natural-galore"), std::string::npos);
}

TEST(Compare, SingleModeSingleSeedHasOneRowAndNoWinRate) {
  CompareSpec spec;
  spec.task = TaskKind::lowrank_regression;
  spec.modes = {Mode::adam};
  spec.budgets = {5};
  spec.eval_every = 5;
  const CompareResult r = run_compare(spec);
  EXPECT_EQ(r.runs.size(), 1u);
  EXPECT_EQ(r.summaries.size(), 1u);
  EXPECT_TRUE(r.win_rates.empty());
}

TEST(Compare, RejectsEmptyGrid) {
  CompareSpec spec = small_spec();
  spec.seeds.clear();
  EXPECT_THROW(run_compare(spec), InvalidArgument);
  spec = small_spec();
  spec.budgets = {0};
  EXPECT_THROW(run_compare(spec), InvalidArgument);
}

TEST(Compare, CsvOutputIsDeterministic) {
  const fs::path base = fs::temp_directory_path() / "ngalore_compare_test";
  fs::remove_all(base);
  CompareSpec spec = small_spec();
  spec.out_dir = base / "a";
  const CompareResult first = run_compare(spec);
  spec.out_dir = base / "b";
  spec.jobs = 2;
  run_compare(spec);

  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(base / "a")) {
    ++files;
    const fs::path twin = base / "b" / entry.path().filename();
    ASSERT_TRUE(fs::exists(twin)) << twin;
    EXPECT_EQ(slurp(entry.path()), slurp(twin)) << entry.path().filename();
  }
  EXPECT_EQ(files, first.runs.size() + 1);
  EXPECT_TRUE(fs::exists(base / "a" / "summary.csv"));
  EXPECT_TRUE(fs::exists(base / "a" / run_csv_name(spec.task, first.runs.front())));
  fs::remove_all(base);
}

TEST(Compare, CsvNameEncodesRun) {
  RunOutcome run{Mode::natural_galore, 0.01, 250, 3, {}};
  const std::string name = run_csv_name(TaskKind::lowrank_regression, run);
  EXPECT_NE(name.find("lowrank-regression"), std::string::npos);
  EXPECT_NE(name.find("natural-galore"), std::string::npos);
  EXPECT_NE(name.find("_b250_"), std::string::npos);
  EXPECT_NE(name.find("seed3.csv"), std::string::npos);
}

}  // namespace
}  // namespace ngalore
