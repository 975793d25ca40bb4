#include "cmdforge/baselines.h"

#include "cmdforge/errors.h"

namespace cmdforge {

std::string_view to_string(BaselineKind kind) {
  return kind == BaselineKind::SingleAgent ? "single_agent" : "debate";
}

BaselineConfig BaselineConfig::single_agent(PromptSpec prompt) {
  BaselineConfig c;
  c.kind = BaselineKind::SingleAgent;
  c.n_agents = 1;
  c.rounds = 1;
  c.prompt = std::move(prompt);
  return c;
}

void BaselineConfig::validate() const {
  if (kind == BaselineKind::SingleAgent) {
    if (n_agents != 1 || rounds != 1) {
      throw ConfigError("single_agent requires n_agents = 1 and rounds = 1");
    }
    return;
  }
  if (n_agents < 1) throw ConfigError("debate needs at least 1 agent");
  if (rounds < 1) throw ConfigError("rounds must be at least 1");
}

nlohmann::json to_json(const BaselineConfig& c) {
  nlohmann::json prompt{{"step_by_step", c.prompt.step_by_step},
                        {"task_description", c.prompt.task_description},
                        {"response_format", c.prompt.response_format},
                        {"one_shot", c.prompt.one_shot}};
  if (c.prompt.hold_view) prompt["hold_view"] = to_string(*c.prompt.hold_view);
  return {{"mechanism", to_string(c.kind)},
          {"n_agents", c.n_agents},
          {"rounds", c.rounds},
          {"hold_different_views", c.hold_different_views},
          {"prompt", prompt}};
}

namespace {

DiscussionResult single_round(const TaskInstance& task, const BaselineConfig& config,
                              const AgentFactory& agents, std::string mechanism) {
  Transcript transcript;
  transcript.mechanism = std::move(mechanism);
  transcript.task_id = task.id;
  transcript.config = to_json(config);

  std::vector<AgentSession> sessions;
  sessions.push_back(agents.make(agent_name(0), task));
  auto records = run_agent_calls(sessions, {0},
                                 {opening_messages(task, config.prompt, config.hold_different_views, 0)},
                                 0, 0, config.scheduling, transcript);
  transcript.rounds.push_back(summarize_round(0, 0, records));
  transcript.final_verdict = records.front().viewpoint;
  transcript.resolution = Resolution::Vote;
  account_sessions(sessions, transcript);
  return {*transcript.final_verdict, transcript.resolution, std::move(transcript)};
}

}  // namespace

DiscussionResult run_single_agent(const TaskInstance& task, const BaselineConfig& config,
                                  const AgentFactory& agents) {
  task.validate();
  config.validate();
  if (config.kind != BaselineKind::SingleAgent) throw ConfigError("config is not single_agent");
  return single_round(task, config, agents, "single_agent");
}

DiscussionResult run_debate(const TaskInstance& task, const BaselineConfig& config,
                            const AgentFactory& agents) {
  task.validate();
  config.validate();
  if (config.kind != BaselineKind::Debate) throw ConfigError("config is not debate");
  if (config.n_agents == 1) return single_round(task, config, agents, "debate");

  Transcript transcript;
  transcript.mechanism = "debate";
  transcript.task_id = task.id;
  transcript.config = to_json(config);

  std::vector<AgentSession> sessions;
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < config.n_agents; ++i) {
    sessions.push_back(agents.make(agent_name(i), task));
    active.push_back(i);
  }

  std::vector<AnswerRecord> history;
  for (std::size_t round = 0; round < config.rounds; ++round) {
    std::vector<std::vector<Message>> prompts;
    for (std::size_t i : active) {
      if (round == 0) {
        prompts.push_back(opening_messages(task, config.prompt, config.hold_different_views, i));
        continue;
      }
      OpinionDigest digest;
      digest.group_count = 1;
      for (const auto& rec : history) {
        if (rec.agent_index != i) digest.own_group.push_back({rec.agent_id, rec.viewpoint, rec.explanation});
      }
      prompts.push_back({{Role::System, render_discussion_prompt(digest)},
                         {Role::User, mid_round_instruction()}});
    }
    history = run_agent_calls(sessions, active, std::move(prompts), 0, round, config.scheduling,
                              transcript);
    transcript.rounds.push_back(summarize_round(0, round, history));
  }

  const VoteResult vote = answer_vote(history);
  if (vote.decided) {
    transcript.final_verdict = vote.decided;
    transcript.resolution = Resolution::Vote;
  } else {
    transcript.final_verdict = Verdict::Unknown;
    transcript.resolution = Resolution::Unresolved;
    transcript.ties.push_back({0, vote.tally, vote.tied, Resolution::Unresolved, {}, Verdict::Unknown,
                               "debate tie recorded as Unknown"});
  }
  account_sessions(sessions, transcript);
  return {*transcript.final_verdict, transcript.resolution, std::move(transcript)};
}

nlohmann::json debate_mechanism_spec(std::size_t n_agents, std::size_t rounds,
                                     const std::string& model) {
  if (n_agents < 1 || rounds < 1) throw ConfigError("debate spec needs n >= 1 and R >= 1");
  nlohmann::json agents = nlohmann::json::array();
  for (std::size_t i = 0; i < n_agents; ++i) agents.push_back({{"id", agent_name(i)}, {"model", model}});

  auto node_id = [](std::size_t round, std::size_t agent) {
    return "r" + std::to_string(round) + "_" + agent_name(agent);
  };
  nlohmann::json nodes = nlohmann::json::array();
  nlohmann::json edges = nlohmann::json::array();
  nodes.push_back({{"id", "x"}, {"kind", "input"}});
  for (std::size_t r = 0; r < rounds; ++r) {
    for (std::size_t i = 0; i < n_agents; ++i) {
      nodes.push_back({{"id", node_id(r, i)},
                       {"kind", "inference"},
                       {"agent", agent_name(i)},
                       {"prompt", r == 0 ? "debate:opening" : "debate:discussion"}});
      if (r == 0) {
        edges.push_back({"x", node_id(r, i)});
      } else {
        for (std::size_t j = 0; j < n_agents; ++j) edges.push_back({node_id(r - 1, j), node_id(r, i)});
      }
      if (r + 1 == rounds) edges.push_back({node_id(r, i), "y"});
    }
  }
  nodes.push_back({{"id", "y"}, {"kind", "output"}});
  return {{"agents", agents}, {"nodes", nodes}, {"edges", edges}};
}

}  // namespace cmdforge
