#pragma once

#include <cstddef>

#include <nlohmann/json.hpp>

#include "cmdforge/cmd_protocol.h"

namespace cmdforge {

enum class BaselineKind { SingleAgent, Debate };

std::string_view to_string(BaselineKind kind);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::Debate;
  std::size_t n_agents = 3;
  std::size_t rounds = 3;
  PromptSpec prompt = PromptSpec::all_features();
  bool hold_different_views = false;
  RoundScheduling scheduling;

  static BaselineConfig single_agent(PromptSpec prompt = PromptSpec::all_features());
  void validate() const;
};

nlohmann::json to_json(const BaselineConfig& config);

// One session, one inference (plus at most one re-ask).
DiscussionResult run_single_agent(const TaskInstance& task, const BaselineConfig& config,
                                  const AgentFactory& agents);

// Every agent sees every other agent's full previous answer each round. A
// tied final vote yields Unknown with resolution Unresolved. With a single
// agent this reduces to run_single_agent.
DiscussionResult run_debate(const TaskInstance& task, const BaselineConfig& config,
                            const AgentFactory& agents);

// Mechanism spec document (same schema as load_mechanism) describing a
// Debate of n agents over R rounds: one inference node per agent and round,
// each round-r node fed by every round-(r-1) node.
nlohmann::json debate_mechanism_spec(std::size_t n_agents, std::size_t rounds,
                                     const std::string& model = "gpt-35-turbo-0613");

}  // namespace cmdforge
