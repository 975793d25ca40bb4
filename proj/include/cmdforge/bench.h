#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmdforge/run_config.h"

namespace cmdforge {

struct Dataset {
  std::vector<TaskInstance> cases;
  std::filesystem::path source;
  std::string digest;  // sha256 of the file bytes
};

// JSON lines of {id, premises, conclusion, label}; blank lines are skipped.
// Throws DatasetError naming the offending line.
Dataset parse_dataset(std::string_view text, const std::filesystem::path& source = {});
Dataset load_dataset(const std::filesystem::path& path);

struct CaseResult {
  std::string id;
  Verdict gold = Verdict::Unknown;
  std::optional<Verdict> verdict;
  bool correct = false;
  bool errored = false;
  std::string error;
  Resolution resolution = Resolution::Vote;
  std::vector<std::optional<Verdict>> round_majorities;  // base-level rounds
  std::size_t calls = 0;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

nlohmann::json to_json(const CaseResult& r);
CaseResult case_result_from_json(const nlohmann::json& j);

struct CurvePoint {
  std::size_t round = 0;
  double accuracy = 0.0;
};

struct RunResult {
  std::vector<CaseResult> cases;  // dataset order
  std::size_t attempted = 0;
  std::size_t correct = 0;
  std::size_t errored = 0;
  double accuracy = 0.0;
  bool exclude_errored = false;
  std::size_t calls = 0;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
  std::string config_digest;
  std::string dataset_digest;
  bool complete = true;  // false when stopped early
};

// Accuracy of the plurality of each base-level round's viewpoints. Ties and
// errored cases count as incorrect; errored cases are skipped when the run
// excludes them. Throws ConfigError when completed cases differ in R.
std::vector<CurvePoint> per_round_curve(const RunResult& run);

// Recomputes the aggregate fields of `run` from its cases.
void aggregate(RunResult& run);

nlohmann::json summary_json(const RunResult& run);

struct BenchOptions {
  std::filesystem::path out_dir;
  bool resume = false;
  bool exclude_errored = false;
  // Stops after this many newly completed cases, leaving a resumable run
  // directory. Used to exercise resumption.
  std::optional<std::size_t> stop_after;
};

// Runs `config` over every case, writing config.json, results.jsonl,
// summary.json and transcripts/<id>.json under out_dir. With resume, cases
// already in results.jsonl are skipped; a different config digest is refused
// with ConfigError. Backend failures mark a case errored.
RunResult run_benchmark(const Dataset& dataset, const RunConfig& config, const BenchOptions& options);

}  // namespace cmdforge
