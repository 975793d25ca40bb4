#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "cmdforge/bench.h"
#include "cmdforge/errors.h"
#include "cmdforge/run_config.h"
#include "cmdforge/symmetry.h"

namespace fs = std::filesystem;
using namespace cmdforge;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kUnresolved = 3;
constexpr int kBackend = 4;

int fail(int code, const std::string& message) {
  std::cerr << "cmd-forge: " << message << "\n";
  return code;
}

// Maps library exceptions onto the documented exit codes.
template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const SpecError& e) {
    return fail(kUsage, e.what());
  } catch (const ConfigError& e) {
    return fail(kUsage, e.what());
  } catch (const DatasetError& e) {
    return fail(kUsage, e.what());
  } catch (const CapExceeded& e) {
    return fail(kUsage, e.what());
  } catch (const Error& e) {
    return fail(kBackend, e.what());
  } catch (const std::exception& e) {
    return fail(kBackend, e.what());
  }
}

std::string default_transcript_path(const std::string& id) {
  std::string stem;
  for (char c : id) stem.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_');
  if (stem.empty()) stem = "task";
  return stem + ".transcript.json";
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent discussion toolkit: symmetry analysis, prompts, discussions, benchmarks"};
  app.require_subcommand(1);

  std::string spec_path;
  auto* symmetry = app.add_subcommand("symmetry", "Symmetry report of a mechanism spec (JSON)");
  symmetry->add_option("spec", spec_path, "Mechanism spec file")->required();

  PromptSpec flags{false, false, false, false, std::nullopt};
  bool all_features = false;
  std::string hold_view;
  std::string prompt_task;
  auto* prompt = app.add_subcommand("prompt", "Render the first-round prompt for a task");
  prompt->add_flag("--step-by-step", flags.step_by_step, "Append the step-by-step cue");
  prompt->add_flag("--task-description", flags.task_description, "Include the task description");
  prompt->add_flag("--response-format", flags.response_format, "Include the answer format");
  prompt->add_flag("--one-shot", flags.one_shot, "Include the worked example");
  prompt->add_flag("--all-features", all_features, "Enable all four features");
  prompt->add_option("--hold-view", hold_view, "Initial stance: Correct, Incorrect or Unknown");
  prompt->add_option("task", prompt_task, "Task JSON file")->required();

  std::string config_path, task_path, out_path;
  std::vector<std::string> overrides;
  bool verbose = false;
  auto* discuss = app.add_subcommand("discuss", "Run one discussion and write its transcript");
  discuss->add_option("--config", config_path, "Run config JSON")->required();
  discuss->add_option("--set", overrides, "Config override key=value (repeatable)");
  discuss->add_option("--out", out_path, "Transcript output path");
  discuss->add_flag("-v,--verbose", verbose, "Per-round tallies on stderr");
  discuss->add_option("task", task_path, "Task JSON file")->required();

  std::string bench_config, data_path, bench_out;
  std::vector<std::string> bench_overrides;
  bool resume = false, exclude_errored = false;
  auto* bench = app.add_subcommand("bench", "Run a mechanism over a JSONL dataset");
  bench->add_option("--config", bench_config, "Run config JSON")->required();
  bench->add_option("--data", data_path, "Dataset JSONL")->required();
  bench->add_option("--out", bench_out, "Run directory")->required();
  bench->add_option("--set", bench_overrides, "Config override key=value (repeatable)");
  bench->add_flag("--resume", resume, "Skip cases already in the run directory");
  bench->add_flag("--exclude-errored", exclude_errored, "Leave errored cases out of accuracy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (symmetry->parsed()) {
    return guarded([&] {
      const SymmetryReport report = symmetry_group(load_mechanism(spec_path));
      std::cout << to_json(report).dump(2) << "\n";
      return kOk;
    });
  }

  if (prompt->parsed()) {
    return guarded([&] {
      PromptSpec spec = all_features ? PromptSpec::all_features() : flags;
      if (!hold_view.empty()) {
        spec.hold_view = verdict_from_string(hold_view);
        if (!spec.hold_view) throw ConfigError("--hold-view expects Correct, Incorrect or Unknown");
      }
      const TaskInstance task = load_task(prompt_task);
      std::string user = render_question(task);
      if (spec.hold_view) user += "\n" + hold_view_instruction(spec.hold_view);
      std::cout << render_system_prompt(spec) << "\n\n" << user << "\n";
      return kOk;
    });
  }

  if (discuss->parsed()) {
    return guarded([&] {
      const RunConfig config = load_run_config(config_path, overrides);
      const TaskInstance task = load_task(task_path);
      const Runtime runtime = make_runtime(config);
      const fs::path transcript_path = out_path.empty() ? default_transcript_path(task.id) : out_path;
      try {
        DiscussionResult result = run_case(config, task, runtime.agents);
        write_file(transcript_path, to_json(result.transcript).dump(2) + "\n");
        if (verbose) {
          for (const auto& r : result.transcript.rounds) {
            std::cerr << "level " << r.level << " round " << r.round << ": Correct=" << r.tally[0]
                      << " Incorrect=" << r.tally[1] << " Unknown=" << r.tally[2] << "\n";
          }
        }
        std::cout << nlohmann::json{{"task_id", task.id},
                                    {"verdict", to_string(result.verdict)},
                                    {"resolution", to_string(result.resolution)},
                                    {"calls", result.transcript.call_count},
                                    {"transcript", transcript_path.string()}}
                         .dump()
                  << "\n";
        return result.resolution == Resolution::Unresolved ? kUnresolved : kOk;
      } catch (const DiscussionAborted& e) {
        write_file(transcript_path, nlohmann::json::parse(e.transcript_json()).dump(2) + "\n");
        return fail(kBackend, std::string(e.what()) + " (transcript: " + transcript_path.string() + ")");
      }
    });
  }

  if (bench->parsed()) {
    return guarded([&] {
      const RunConfig config = load_run_config(bench_config, bench_overrides);
      const Dataset dataset = load_dataset(data_path);
      BenchOptions options;
      options.out_dir = bench_out;
      options.resume = resume;
      options.exclude_errored = exclude_errored;
      const RunResult run = run_benchmark(dataset, config, options);
      nlohmann::json out = summary_json(run);
      out["run_dir"] = bench_out;
      std::cout << out.dump(2) << "\n";
      return kOk;
    });
  }
  return kUsage;
}
