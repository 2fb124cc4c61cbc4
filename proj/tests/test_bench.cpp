#include <gtest/gtest.h>

#include <filesystem>

#include "dmsconfig/bench.hpp"
#include "dmsconfig/error.hpp"
#include "dmsconfig/kv_file.hpp"

using namespace dmsconfig;
namespace fs = std::filesystem;

namespace {

ExperimentPlan tiny_plan() {
  ExperimentPlan p;
  p.scenarios = {use_case(2)};
  p.lcfs = {0, 1};
  p.dataset_size = 60;
  p.seeds = {3};
  p.forest.n_trees = 5;
  p.agent.total_steps = 40;
  p.agent.batch_size = 16;
  p.agent.hidden_units = 16;
  return p;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dmsconfig_bench_" + name);
  fs::remove_all(dir);
  return dir;
}

ScenarioSummary reference_summary() {
  ScenarioSummary s;
  s.scenario = use_case(2);
  const auto o = evaluate(default_space().defaults(), s.scenario, 0.0, 0);
  s.default_throughput = o.throughput;
  s.default_latency = o.latency;
  return s;
}

}  // namespace

TEST(Lcf, Examples) {
  EXPECT_DOUBLE_EQ(lcf_to_limit(5.163, 1), 5.163);
  EXPECT_DOUBLE_EQ(lcf_to_limit(5.163, 10), 0.5163);
  EXPECT_EQ(lcf_to_limit(5.163, 0), kUnconstrained);
  EXPECT_EQ(lcf_to_limit(0.1, 0), kUnconstrained);
  EXPECT_THROW(lcf_to_limit(5.163, -1), std::invalid_argument);
  EXPECT_THROW(lcf_to_limit(0, 1), std::invalid_argument);
}

TEST(Lcf, LimitStrictlyDecreasing) {
  double previous = kUnconstrained;
  for (double lcf : {0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 100.0}) {
    const double l = lcf_to_limit(5.163, lcf);
    EXPECT_LT(l, previous);
    previous = l;
  }
}

TEST(Plan, DefaultsAndValidation) {
  const ExperimentPlan p;
  EXPECT_EQ(p.scenarios.size(), 9u);
  EXPECT_EQ(p.lcfs, (std::vector<double>{0, 1, 2, 4, 6, 8, 10}));
  p.check();
  auto bad = p;
  bad.lcfs = {1, -2};
  EXPECT_THROW(bad.check(), std::invalid_argument);
  bad = p;
  bad.scenarios.clear();
  EXPECT_THROW(bad.check(), std::invalid_argument);
  bad = p;
  bad.methods = {"ddpg", "smac"};
  EXPECT_THROW(bad.check(), std::invalid_argument);
}

TEST(Plan, FileRoundTrip) {
  auto p = tiny_plan();
  p.scenarios.push_back(use_case(6));
  p.scenarios.back().name = "slow-link";
  p.forest.max_depth = 12;
  p.agent.reward_mode = RewardMode::literal;
  const auto text = serialize_plan(p);
  const auto q = parse_plan(text);
  EXPECT_EQ(serialize_plan(q), text);
  EXPECT_EQ(q.scenarios, p.scenarios);
  EXPECT_EQ(q.agent, p.agent);
  EXPECT_EQ(q.forest, p.forest);

  const auto short_form = parse_plan("scenarios = 2, test-6\nlcf = 0, 4\nseeds = 1,2,3\nmethods = random\n");
  ASSERT_EQ(short_form.scenarios.size(), 2u);
  EXPECT_EQ(short_form.scenarios[1], use_case(6));
  EXPECT_EQ(short_form.lcfs, (std::vector<double>{0, 4}));
  EXPECT_EQ(short_form.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_THROW(parse_plan("lcf = 0, -1\n"), std::invalid_argument);
  EXPECT_THROW(parse_plan("budget = 3\n"), FormatError);
}

TEST(Report, AssessUsesOracleAndSelfIsZero) {
  const auto summary = reference_summary();
  const auto self = assess(default_space().defaults(), summary, lcf_to_limit(summary.default_latency, 1),
                           OracleProfile{});
  EXPECT_EQ(self.improvement_percent, 0.0);
  EXPECT_FALSE(self.violation);  // equal to the limit is allowed
  const auto tight = assess(default_space().defaults(), summary, lcf_to_limit(summary.default_latency, 2),
                            OracleProfile{});
  EXPECT_TRUE(tight.violation);

  Report r;
  r.scenarios = {summary};
  r.lcfs = {1};
  r.seeds = {1};
  r.methods = {"ddpg"};
  auto cell = self;
  cell.lcf = 1;
  cell.seed = 1;
  cell.method = "ddpg";
  r.cells = {cell};
  const auto text = render_report(r);
  EXPECT_NE(text.find("0.0%"), std::string::npos);
  EXPECT_EQ(text.find("-0.0%"), std::string::npos);
  EXPECT_EQ(text.find('*' + std::string("\n")), std::string::npos);
}

TEST(Report, EmptyMethodSetRendersHeaderOnly) {
  Report r;
  r.scenarios = {reference_summary()};
  r.lcfs = {0, 1};
  r.seeds = {1};
  const auto text = render_report(r);
  EXPECT_NE(text.find("test-2"), std::string::npos);
  EXPECT_EQ(text.find("=="), std::string::npos);
  EXPECT_EQ(text.find("violations"), std::string::npos);
  EXPECT_EQ(report_from_json(report_to_json(r)).cells.size(), 0u);
}

TEST(Report, ViolationPercent) {
  Report r;
  r.methods = {"a", "b"};
  for (int i = 0; i < 4; ++i) {
    CellResult c;
    c.method = "a";
    c.completed = true;
    c.violation = i == 0;
    r.cells.push_back(c);
  }
  CellResult failed;
  failed.method = "b";
  failed.completed = false;
  r.cells.push_back(failed);
  EXPECT_DOUBLE_EQ(r.violation_percent("a"), 25.0);
  EXPECT_DOUBLE_EQ(r.violation_percent("b"), 0.0);
  EXPECT_FALSE(r.all_completed());
}

TEST(Sha256, KnownVector) {
  const auto dir = scratch("sha");
  fs::create_directories(dir);
  write_text_file((dir / "abc").string(), "abc");
  EXPECT_EQ(sha256_file((dir / "abc").string()),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::remove_all(dir);
}

TEST(RunPlan, TinyPlanEndToEnd) {
  const auto plan = tiny_plan();
  const auto dir = scratch("tiny");
  const auto report = run_plan(plan, dir.string());
  ASSERT_EQ(report.cells.size(), plan.scenarios.size() * plan.lcfs.size() * plan.seeds.size() * plan.methods.size());
  EXPECT_TRUE(report.all_completed());
  for (const auto& c : report.cells) {
    const auto& s = report.scenarios[0];
    const auto o = evaluate(c.recommended, s.scenario, 0.0, 0);
    EXPECT_EQ(c.oracle_throughput, o.throughput);
    EXPECT_EQ(c.violation, o.latency > c.latency_limit);
    EXPECT_DOUBLE_EQ(c.improvement_percent, 100 * (o.throughput - s.default_throughput) / s.default_throughput);
  }
  EXPECT_NEAR(report.scenarios[0].default_latency, 5.163, 1e-3);

  // the text table flags exactly the violating cells
  const auto text = read_text_file((dir / "report.txt").string());
  std::size_t stars = 0;
  for (char ch : text) stars += ch == '*';
  std::size_t violations = 0;
  for (const auto& c : report.cells) violations += c.violation;
  EXPECT_EQ(stars, violations + 1);  // one '*' in the legend line

  // every file is listed in the manifest with its hash
  const auto manifest = parse_kv(read_text_file((dir / "manifest.txt").string()));
  ASSERT_EQ(manifest.size(), 2u);
  std::size_t listed = 0;
  for (const auto& [file, hash] : manifest[1].entries) {
    EXPECT_EQ(sha256_file((dir / file).string()), hash) << file;
    ++listed;
  }
  std::size_t on_disk = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) on_disk += e.is_regular_file();
  EXPECT_EQ(listed + 1, on_disk);
  EXPECT_TRUE(fs::exists(dir / "test-2" / "model.json"));
  EXPECT_TRUE(fs::exists(dir / "test-2" / "dataset.csv"));
  EXPECT_TRUE(fs::exists(dir / "test-2" / "cells" / "lcf-1_seed-3_ddpg.agent.json"));

  const auto back = report_from_json(nlohmann::json::parse(read_text_file((dir / "report.json").string())));
  EXPECT_EQ(report_to_json(back), report_to_json(report));
  EXPECT_EQ(render_report(back), text);
  fs::remove_all(dir);
}

TEST(RunPlan, ByteIdenticalReruns) {
  auto plan = tiny_plan();
  plan.workers = 1;
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  run_plan(plan, a.string());
  plan.workers = 3;  // worker count must not matter
  run_plan(plan, b.string());
  for (const char* f : {"report.json", "report.txt", "test-2/model.json", "test-2/dataset.csv"})
    EXPECT_EQ(read_text_file((a / f).string()), read_text_file((b / f).string())) << f;
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(RunPlan, FailedCellsAreReported) {
  auto plan = tiny_plan();
  plan.methods = {"random"};
  OracleProfile broken;
  broken.latency_base_ms = -100;  // default latency goes negative, lcf_to_limit rejects it
  const auto dir = scratch("failing");
  const auto report = run_plan(plan, dir.string(), broken);
  EXPECT_FALSE(report.all_completed());
  for (const auto& c : report.cells) EXPECT_FALSE(c.error.empty());
  EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
  EXPECT_NE(read_text_file((dir / "report.txt").string()).find("FAILED"), std::string::npos);
  fs::remove_all(dir);
}
