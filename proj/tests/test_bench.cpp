#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "cmdforge/bench.h"
#include "cmdforge/errors.h"
#include "support/fixtures.h"
#include "support/oracles.h"

using namespace cmdforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string dataset_text(std::size_t n, std::uint64_t seed) {
  static const char* labels[] = {"True", "False", "Unknown"};
  std::mt19937_64 rng(seed);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    json j{{"id", "case-" + std::to_string(i)},
           {"premises", {"Premise one of " + std::to_string(i) + ".", "Premise two."}},
           {"conclusion", "Conclusion " + std::to_string(i) + "."},
           {"label", labels[rng() % 3]}};
    out += j.dump() + "\n";
  }
  return out;
}

json flip_config(std::size_t n_agents, std::uint64_t seed, double p_correct) {
  json j{{"mechanism", "cmd"}, {"n_agents", n_agents}, {"rounds", 3}, {"tie_mode", "secretary"}};
  j["backend"] = {{"kind", "scripted"},
                  {"script",
                   {{"policy", "flip_to_majority"},
                    {"initial", {{"seed", seed}, {"p_correct", p_correct}}},
                    {"secretary", {{"policy", "constant"}, {"verdict", "Unknown"}}}}}};
  return j;
}

std::string slurp(const fs::path& p) { return fixtures::read_file(p); }

}  // namespace

TEST(Dataset, ParsesAndDigests) {
  Dataset d = parse_dataset(dataset_text(5, 1) + "\n");
  ASSERT_EQ(d.cases.size(), 5u);
  EXPECT_EQ(d.cases[2].id, "case-2");
  EXPECT_EQ(d.digest.size(), 64u);
  EXPECT_NE(parse_dataset(dataset_text(5, 2)).digest, d.digest);
}

TEST(Dataset, ErrorsNameTheLine) {
  const std::string good = dataset_text(2, 1);
  auto expect_line = [](const std::string& text, const std::string& needle) {
    try {
      parse_dataset(text);
      FAIL() << "expected DatasetError";
    } catch (const DatasetError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_line(good + "{oops\n", "line 3");
  expect_line(good + R"({"premises": ["a."], "conclusion": "b.", "label": "True"})" + "\n", "line 3");
  expect_line(good + R"({"id": "x", "premises": ["a."], "conclusion": "b."})" + "\n", "line 3");
  expect_line(good + R"({"id": "case-0", "premises": ["a."], "conclusion": "b.", "label": "True"})" + "\n",
              "line 3");
  EXPECT_THROW(parse_dataset("\n\n"), DatasetError);
  EXPECT_THROW(load_dataset("/nonexistent/data.jsonl"), DatasetError);
}

TEST(CaseResult, JsonRoundTrip) {
  CaseResult r;
  r.id = "a";
  r.gold = Verdict::Incorrect;
  r.verdict = Verdict::Unknown;
  r.resolution = Resolution::Secretary;
  r.round_majorities = {Verdict::Correct, std::nullopt};
  r.calls = 19;
  EXPECT_EQ(to_json(case_result_from_json(to_json(r))), to_json(r));
}

TEST(Bench, AccuracyMatchesOracle) {
  fixtures::TempDir dir;
  const Dataset d = parse_dataset(dataset_text(40, 5));
  RunConfig c = RunConfig::from_json(flip_config(6, 17, 0.5));
  RunResult run = run_benchmark(d, c, {dir.path() / "run"});

  std::size_t expected_correct = 0;
  for (const auto& task : d.cases) {
    std::vector<Verdict> initial;
    for (std::size_t i = 0; i < 6; ++i) {
      initial.push_back(seeded_verdict(17, 0.5, task.id, agent_name(i), *task.gold));
    }
    const auto o = oracle::cmd_outcome(initial, 3, true, Verdict::Unknown);
    expected_correct += o.verdict == *task.gold;
  }
  EXPECT_EQ(run.attempted, 40u);
  EXPECT_EQ(run.correct, expected_correct);
  EXPECT_DOUBLE_EQ(run.accuracy, expected_correct / 40.0);
  EXPECT_TRUE(run.complete);
  EXPECT_TRUE(fs::exists(dir.path() / "run" / "summary.json"));
  EXPECT_TRUE(fs::exists(dir.path() / "run" / "transcripts" / "case-7.json"));
}

TEST(Bench, CallAccountingSumsToBudgetUse) {
  fixtures::TempDir dir;
  const Dataset d = parse_dataset(dataset_text(12, 3));
  json j = flip_config(6, 4, 0.4);
  j["concurrency"] = {{"workers", 3}};
  RunResult run = run_benchmark(d, RunConfig::from_json(j), {dir.path()});
  std::size_t sum = 0;
  for (const auto& r : run.cases) {
    EXPECT_GE(r.calls, 18u);
    sum += r.calls;
    const json t = json::parse(slurp(dir.path() / "transcripts" / (r.id + ".json")));
    EXPECT_EQ(t.at("accounting").at("calls").get<std::size_t>(), r.calls);
  }
  EXPECT_EQ(run.calls, sum);
}

TEST(Bench, ResumeProducesIdenticalResults) {
  fixtures::TempDir dir;
  const Dataset d = parse_dataset(dataset_text(15, 9));
  RunConfig c = RunConfig::from_json(flip_config(4, 2, 0.6));

  RunResult full = run_benchmark(d, c, {dir.path() / "full"});
  BenchOptions partial{dir.path() / "partial"};
  partial.stop_after = 6;
  RunResult first = run_benchmark(d, c, partial);
  EXPECT_FALSE(first.complete);
  EXPECT_EQ(first.cases.size(), 6u);
  BenchOptions resume{dir.path() / "partial", true};
  RunResult second = run_benchmark(d, c, resume);
  EXPECT_TRUE(second.complete);
  EXPECT_EQ(second.correct, full.correct);
  EXPECT_EQ(slurp(dir.path() / "full" / "results.jsonl"), slurp(dir.path() / "partial" / "results.jsonl"));
  EXPECT_EQ(slurp(dir.path() / "full" / "summary.json"), slurp(dir.path() / "partial" / "summary.json"));
}

TEST(Bench, RefusesMismatchedResume) {
  fixtures::TempDir dir;
  const Dataset d = parse_dataset(dataset_text(4, 9));
  run_benchmark(d, RunConfig::from_json(flip_config(4, 2, 0.6)), {dir.path()});
  EXPECT_THROW(run_benchmark(d, RunConfig::from_json(flip_config(4, 3, 0.6)), {dir.path(), true}),
               ConfigError);
  EXPECT_THROW(run_benchmark(parse_dataset(dataset_text(5, 9)), RunConfig::from_json(flip_config(4, 2, 0.6)),
                             {dir.path(), true}),
               ConfigError);
  EXPECT_THROW(run_benchmark(d, RunConfig::from_json(flip_config(4, 2, 0.6)), {dir.path()}), ConfigError);
  // Different scheduling is still the same experiment.
  json j = flip_config(4, 2, 0.6);
  j["concurrency"] = {{"workers", 2}, {"parallel_agents", true}};
  EXPECT_NO_THROW(run_benchmark(d, RunConfig::from_json(j), {dir.path(), true}));
}

TEST(Bench, ErroredCasesAreRecorded) {
  fixtures::TempDir dir;
  const Dataset d = parse_dataset(dataset_text(3, 1));
  json j{{"mechanism", "cmd"}, {"n_agents", 3}, {"rounds", 2}};
  j["backend"] = {{"kind", "scripted"},
                  {"script", {{"policy", "sequence"}, {"replies", {{"default", {"[Correct]"}}}}}}};
  RunResult run = run_benchmark(d, RunConfig::from_json(j), {dir.path(), false, false});
  EXPECT_EQ(run.errored, 3u);
  EXPECT_EQ(run.correct, 0u);
  EXPECT_EQ(run.attempted, 3u);
  EXPECT_FALSE(run.cases[0].error.empty());
  RunResult excluded = run_benchmark(d, RunConfig::from_json(j), {dir.path() / "x", false, true});
  EXPECT_EQ(excluded.attempted, 0u);
  EXPECT_DOUBLE_EQ(excluded.accuracy, 0.0);
}

TEST(Curve, ConvergingAgentsImproveMonotonically) {
  fixtures::TempDir dir;
  const Dataset d = parse_dataset(dataset_text(30, 21));
  json j{{"mechanism", "cmd"}, {"n_agents", 6}, {"rounds", 4}};
  j["backend"] = {{"kind", "scripted"},
                  {"script",
                   {{"policy", "converge_to_gold"},
                    {"initial", {{"seed", 5}, {"p_correct", 0.2}}},
                    {"switch_round", {{"seed", 8}, {"max", 3}}}}}};
  RunResult run = run_benchmark(d, RunConfig::from_json(j), {dir.path()});
  const auto curve = per_round_curve(run);
  ASSERT_EQ(curve.size(), 4u);
  for (std::size_t r = 1; r < curve.size(); ++r) EXPECT_GE(curve[r].accuracy, curve[r - 1].accuracy);
  EXPECT_DOUBLE_EQ(curve.back().accuracy, 1.0);
  EXPECT_LT(curve.front().accuracy, 1.0);
}

TEST(Curve, ConstantAgentsAreFlat) {
  fixtures::TempDir dir;
  const Dataset d = parse_dataset(dataset_text(9, 2));
  json j{{"mechanism", "debate"}, {"n_agents", 3}, {"rounds", 3}};
  j["backend"] = {{"kind", "scripted"}, {"script", {{"policy", "constant"}, {"verdict", "Correct"}}}};
  RunResult run = run_benchmark(d, RunConfig::from_json(j), {dir.path()});
  const auto curve = per_round_curve(run);
  ASSERT_EQ(curve.size(), 3u);
  for (const auto& p : curve) EXPECT_DOUBLE_EQ(p.accuracy, run.accuracy);
}

TEST(Curve, MixedRoundCountsRejected) {
  RunResult run;
  CaseResult a, b;
  a.round_majorities = {Verdict::Correct};
  b.round_majorities = {Verdict::Correct, Verdict::Correct};
  run.cases = {a, b};
  EXPECT_THROW(per_round_curve(run), ConfigError);
}
