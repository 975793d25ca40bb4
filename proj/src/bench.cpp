#include "cmdforge/bench.h"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "cmdforge/digest.h"
#include "cmdforge/errors.h"

namespace fs = std::filesystem;

namespace cmdforge {

Dataset parse_dataset(std::string_view text, const fs::path& source) {
  Dataset ds;
  ds.source = source;
  ds.digest = sha256_hex(text);
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where =
        (source.empty() ? std::string("dataset") : source.string()) + " line " + std::to_string(line_no);
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DatasetError(where + ": malformed JSON line");
    TaskInstance task;
    try {
      task = task_from_json(j);
    } catch (const SpecError& e) {
      throw DatasetError(where + ": " + e.what());
    }
    if (task.id.empty()) throw DatasetError(where + ": missing id");
    if (!task.gold) throw DatasetError(where + ": missing label");
    if (!seen.insert(task.id).second) throw DatasetError(where + ": duplicate id '" + task.id + "'");
    ds.cases.push_back(std::move(task));
  }
  if (ds.cases.empty()) throw DatasetError("dataset " + source.string() + " has no cases");
  return ds;
}

Dataset load_dataset(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read dataset " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str(), path);
}

namespace {

nlohmann::json optional_verdict(const std::optional<Verdict>& v) {
  return v ? nlohmann::json(to_string(*v)) : nlohmann::json(nullptr);
}

std::optional<Verdict> verdict_or_null(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  auto v = verdict_from_string(j.get<std::string>());
  if (!v) throw DatasetError("invalid verdict in results: " + j.dump());
  return v;
}

Resolution resolution_from_string(const std::string& s) {
  for (Resolution r : {Resolution::Vote, Resolution::Secretary, Resolution::Representatives,
                       Resolution::Unresolved}) {
    if (to_string(r) == s) return r;
  }
  throw DatasetError("invalid resolution in results: " + s);
}

}  // namespace

nlohmann::json to_json(const CaseResult& r) {
  nlohmann::json majorities = nlohmann::json::array();
  for (const auto& m : r.round_majorities) majorities.push_back(optional_verdict(m));
  return {{"id", r.id},
          {"gold", to_string(r.gold)},
          {"verdict", optional_verdict(r.verdict)},
          {"correct", r.correct},
          {"errored", r.errored},
          {"error", r.error},
          {"resolution", to_string(r.resolution)},
          {"round_majorities", std::move(majorities)},
          {"calls", r.calls},
          {"prompt_tokens", r.prompt_tokens},
          {"completion_tokens", r.completion_tokens}};
}

CaseResult case_result_from_json(const nlohmann::json& j) {
  try {
    CaseResult r;
    r.id = j.at("id").get<std::string>();
    r.gold = *verdict_or_null(j.at("gold"));
    r.verdict = verdict_or_null(j.at("verdict"));
    r.correct = j.at("correct").get<bool>();
    r.errored = j.at("errored").get<bool>();
    r.error = j.value("error", std::string{});
    r.resolution = resolution_from_string(j.at("resolution").get<std::string>());
    for (const auto& m : j.at("round_majorities")) r.round_majorities.push_back(verdict_or_null(m));
    r.calls = j.at("calls").get<std::size_t>();
    r.prompt_tokens = j.at("prompt_tokens").get<std::size_t>();
    r.completion_tokens = j.at("completion_tokens").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("malformed result record: ") + e.what());
  }
}

void aggregate(RunResult& run) {
  run.attempted = run.correct = run.errored = 0;
  run.calls = run.prompt_tokens = run.completion_tokens = 0;
  for (const auto& c : run.cases) {
    run.calls += c.calls;
    run.prompt_tokens += c.prompt_tokens;
    run.completion_tokens += c.completion_tokens;
    if (c.errored) {
      ++run.errored;
      if (run.exclude_errored) continue;
    }
    ++run.attempted;
    run.correct += c.correct;
  }
  run.accuracy = run.attempted ? static_cast<double>(run.correct) / run.attempted : 0.0;
}

std::vector<CurvePoint> per_round_curve(const RunResult& run) {
  std::optional<std::size_t> rounds;
  for (const auto& c : run.cases) {
    if (c.errored) continue;
    if (rounds && *rounds != c.round_majorities.size()) {
      throw ConfigError("cases differ in their number of rounds");
    }
    rounds = c.round_majorities.size();
  }
  std::vector<CurvePoint> curve;
  if (!rounds) return curve;
  for (std::size_t r = 0; r < *rounds; ++r) {
    std::size_t attempted = 0, correct = 0;
    for (const auto& c : run.cases) {
      if (c.errored) {
        if (!run.exclude_errored) ++attempted;
        continue;
      }
      ++attempted;
      correct += c.round_majorities[r] == c.gold;
    }
    curve.push_back({r, attempted ? static_cast<double>(correct) / attempted : 0.0});
  }
  return curve;
}

nlohmann::json summary_json(const RunResult& run) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : per_round_curve(run)) curve.push_back({{"round", p.round}, {"accuracy", p.accuracy}});
  return {{"cases", run.cases.size()},
          {"attempted", run.attempted},
          {"correct", run.correct},
          {"errored", run.errored},
          {"accuracy", run.accuracy},
          {"errored_policy", run.exclude_errored ? "excluded" : "counted_incorrect"},
          {"curve", std::move(curve)},
          {"curve_estimator", "plurality of each base-level round's viewpoints; ties count incorrect"},
          {"accounting",
           {{"calls", run.calls},
            {"prompt_tokens", run.prompt_tokens},
            {"completion_tokens", run.completion_tokens}}},
          {"config_digest", run.config_digest},
          {"dataset_digest", run.dataset_digest},
          {"complete", run.complete}};
}

namespace {

std::string file_stem_for(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out.push_back(safe ? c : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::map<std::string, CaseResult> read_results(const fs::path& path) {
  std::map<std::string, CaseResult> done;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    // A torn final line from an interrupted run is ignored.
    if (j.is_discarded()) continue;
    CaseResult r = case_result_from_json(j);
    done[r.id] = std::move(r);
  }
  return done;
}

CaseResult run_one_case(const RunConfig& config, const TaskInstance& task, const Runtime& runtime,
                        nlohmann::json& transcript_out) {
  CaseResult r;
  r.id = task.id;
  r.gold = *task.gold;
  AgentFactory agents = runtime.agents;
  auto case_budget = std::make_shared<CallBudget>(std::numeric_limits<std::size_t>::max(),
                                                  runtime.budget);
  agents.budget = case_budget;
  try {
    DiscussionResult result = run_case(config, task, agents);
    r.verdict = result.verdict;
    r.correct = result.verdict == r.gold;
    r.resolution = result.resolution;
    r.round_majorities = result.transcript.base_round_majorities();
    r.prompt_tokens = result.transcript.prompt_tokens;
    r.completion_tokens = result.transcript.completion_tokens;
    transcript_out = to_json(result.transcript);
  } catch (const DiscussionAborted& e) {
    r.errored = true;
    r.error = e.what();
    r.resolution = Resolution::Unresolved;
    transcript_out = {{"error", r.error}, {"transcript", nlohmann::json::parse(e.transcript_json())}};
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    r.errored = true;
    r.error = e.what();
    r.resolution = Resolution::Unresolved;
    transcript_out = {{"error", r.error}};
  }
  r.calls = case_budget->used();
  return r;
}

}  // namespace

RunResult run_benchmark(const Dataset& dataset, const RunConfig& config, const BenchOptions& options) {
  if (dataset.cases.empty()) throw DatasetError("dataset has no cases");
  if (options.out_dir.empty()) throw ConfigError("benchmark needs an output directory");

  const fs::path out = options.out_dir;
  const fs::path config_path = out / "config.json";
  const fs::path results_path = out / "results.jsonl";
  const fs::path transcripts = out / "transcripts";
  const std::string digest = config.digest();

  std::map<std::string, CaseResult> done;
  if (options.resume && fs::exists(config_path)) {
    std::ifstream in(config_path);
    nlohmann::json previous = nlohmann::json::parse(in, nullptr, false);
    if (previous.is_discarded()) throw ConfigError("unreadable " + config_path.string());
    if (previous.value("config_digest", std::string{}) != digest) {
      throw ConfigError("config digest differs from the run being resumed in " + out.string());
    }
    if (previous.value("dataset_digest", std::string{}) != dataset.digest) {
      throw ConfigError("dataset differs from the run being resumed in " + out.string());
    }
    done = read_results(results_path);
  } else if (!options.resume && fs::exists(results_path)) {
    throw ConfigError("run directory " + out.string() + " already holds results; pass --resume");
  }

  std::error_code ec;
  fs::create_directories(transcripts, ec);
  if (ec) throw ConfigError("cannot create " + transcripts.string() + ": " + ec.message());
  write_atomic(config_path, nlohmann::json{{"config_digest", digest},
                                           {"dataset_digest", dataset.digest},
                                           {"dataset", dataset.source.string()},
                                           {"config", config.to_json(false)}}
                                .dump(2) +
                                "\n");

  std::vector<std::optional<CaseResult>> slots(dataset.cases.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < dataset.cases.size(); ++i) {
    if (auto it = done.find(dataset.cases[i].id); it != done.end()) {
      slots[i] = it->second;
    } else {
      pending.push_back(i);
    }
  }

  // Existing lines are rewritten so the file stays in dataset order.
  {
    std::string existing;
    for (const auto& s : slots) {
      if (s) existing += to_json(*s).dump() + "\n";
    }
    write_atomic(results_path, existing);
  }

  const Runtime runtime = make_runtime(config);
  std::mutex mutex;
  std::ofstream results(results_path, std::ios::app);
  std::atomic<std::size_t> next{0};
  std::size_t completed = 0;
  std::size_t commit_cursor = 0;  // index into pending of the next line to append
  std::vector<bool> finished(pending.size(), false);
  std::exception_ptr fatal;
  bool stop = false;

  auto worker = [&] {
    while (true) {
      std::size_t k;
      {
        std::lock_guard lock(mutex);
        if (stop || fatal) return;
        k = next++;
        if (k >= pending.size()) return;
        if (options.stop_after && completed >= *options.stop_after) {
          stop = true;
          return;
        }
        ++completed;
      }
      const TaskInstance& task = dataset.cases[pending[k]];
      nlohmann::json transcript;
      CaseResult r;
      try {
        r = run_one_case(config, task, runtime, transcript);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!fatal) fatal = std::current_exception();
        return;
      }
      write_atomic(transcripts / (file_stem_for(task.id) + ".json"), transcript.dump(2) + "\n");
      std::lock_guard lock(mutex);
      slots[pending[k]] = std::move(r);
      finished[k] = true;
      while (commit_cursor < pending.size() && finished[commit_cursor]) {
        results << to_json(*slots[pending[commit_cursor]]).dump() << "\n";
        ++commit_cursor;
      }
      results.flush();
    }
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(config.workers, pending.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  results.close();
  if (fatal) std::rethrow_exception(fatal);

  RunResult run;
  run.exclude_errored = options.exclude_errored;
  run.config_digest = digest;
  run.dataset_digest = dataset.digest;
  for (auto& s : slots) {
    if (s) {
      run.cases.push_back(std::move(*s));
    } else {
      run.complete = false;
    }
  }
  aggregate(run);
  write_atomic(out / "summary.json", summary_json(run).dump(2) + "\n");
  return run;
}

}  // namespace cmdforge
