#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmdforge/baselines.h"
#include "cmdforge/cmd_protocol.h"
#include "cmdforge/scripted.h"

namespace cmdforge {

enum class MechanismKind { Cmd, Debate, SingleAgent };

std::string_view to_string(MechanismKind kind);

enum class BackendKind { Live, Scripted, Cassette, Record };

std::string_view to_string(BackendKind kind);

// Effective run configuration. The JSON schema matches the "config" object
// written into transcripts, so a snapshot can be fed back as a config file.
//
//   mechanism       "cmd" | "debate" | "single_agent"
//   n_agents, rounds, group_size, tie_mode ("secretary" | "representatives"),
//   hold_different_views,
//   prompt          {step_by_step, task_description, response_format,
//                    one_shot, hold_view?}
//   concurrency     {parallel_agents, dispatch_seed?, workers}
//   backend         {kind, endpoint, model, api_key, temperature, max_retries,
//                    timeout_s, backoff_s, budget, cassette?, script?}
struct RunConfig {
  MechanismKind mechanism = MechanismKind::Cmd;
  CmdConfig cmd;
  BaselineConfig baseline;
  BackendKind backend_kind = BackendKind::Scripted;
  BackendConfig backend;
  std::filesystem::path cassette;
  nlohmann::json script;  // scripted policy description
  std::size_t workers = 1;

  static RunConfig from_json(const nlohmann::json& j);

  // Normalized JSON with defaults filled in. The API key is redacted unless
  // include_secrets is set.
  nlohmann::json to_json(bool include_secrets = false) const;

  // sha256 over the redacted snapshot without the concurrency block, which
  // does not affect results.
  std::string digest() const;

  std::size_t agent_count() const;
};

// Applies "a.b.c=value" to a JSON document. value is parsed as JSON when
// possible and taken as a plain string otherwise. Throws ConfigError.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Reads a JSON config file, applies overrides in order, then the
// CMD_FORGE_API_KEY environment variable. Throws ConfigError.
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

// Builds the scripted policy described by a "script" object.
ScriptedPolicy make_policy(const nlohmann::json& script);

struct Runtime {
  std::shared_ptr<Backend> backend;
  std::shared_ptr<CallBudget> budget;
  AgentFactory agents;
};

Runtime make_runtime(const RunConfig& config);

// Runs the configured mechanism on one task. The transcript's config is the
// redacted snapshot of `config`.
DiscussionResult run_case(const RunConfig& config, const TaskInstance& task,
                          const AgentFactory& agents);

TaskInstance load_task(const std::filesystem::path& path);

}  // namespace cmdforge
