#include "cmdforge/cmd_protocol.h"

#include <algorithm>
#include <stdexcept>

#include "cmdforge/errors.h"

namespace cmdforge {

std::string_view to_string(TieMode mode) {
  return mode == TieMode::Secretary ? "secretary" : "representatives";
}

namespace {

std::vector<std::vector<std::size_t>> chunk(std::size_t count, std::size_t size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % size == 0) out.emplace_back();
    out.back().push_back(i);
  }
  return out;
}

}  // namespace

GroupMap gen_group_map(std::size_t n, bool secretary_mode, std::size_t group_size) {
  if (n < 2) throw ConfigError("a discussion needs at least 2 agents");
  if (group_size < 2) throw ConfigError("group size must be at least 2");
  GroupMap map;
  map.levels.push_back(chunk(n, group_size));
  if (!secretary_mode) {
    while (map.levels.back().size() > 1) {
      map.levels.push_back(chunk(map.levels.back().size(), group_size));
    }
  }
  return map;
}

void CmdConfig::validate() const {
  if (n_agents < 2) throw ConfigError("CMD needs at least 2 agents");
  if (rounds < 1) throw ConfigError("rounds must be at least 1");
  if (group_size < 2) throw ConfigError("group size must be at least 2");
}

nlohmann::json to_json(const CmdConfig& c) {
  nlohmann::json prompt{{"step_by_step", c.prompt.step_by_step},
                        {"task_description", c.prompt.task_description},
                        {"response_format", c.prompt.response_format},
                        {"one_shot", c.prompt.one_shot}};
  if (c.prompt.hold_view) prompt["hold_view"] = to_string(*c.prompt.hold_view);
  return {{"mechanism", "cmd"},
          {"n_agents", c.n_agents},
          {"rounds", c.rounds},
          {"group_size", c.group_size},
          {"tie_mode", to_string(c.tie_mode)},
          {"hold_different_views", c.hold_different_views},
          {"prompt", prompt}};
}

OpinionDigest visible_opinions(std::size_t agent, const std::vector<AnswerRecord>& previous,
                               const std::vector<std::vector<std::size_t>>& groups) {
  const std::vector<std::size_t>* own = nullptr;
  for (const auto& g : groups) {
    if (std::find(g.begin(), g.end(), agent) != g.end()) own = &g;
  }
  if (!own) throw std::invalid_argument("agent " + agent_name(agent) + " is not active");

  OpinionDigest digest;
  digest.group_count = groups.size();
  for (const auto& rec : previous) {
    if (rec.agent_index == agent) continue;
    if (std::find(own->begin(), own->end(), rec.agent_index) != own->end()) {
      digest.own_group.push_back({rec.agent_id, rec.viewpoint, rec.explanation});
    } else {
      ++digest.other_groups[index_of(rec.viewpoint)];
    }
  }
  return digest;
}

std::size_t pick_representative(const std::vector<std::size_t>& group,
                                 const std::vector<AnswerRecord>& history) {
  std::vector<const AnswerRecord*> members;
  for (const auto& rec : history) {
    if (std::find(group.begin(), group.end(), rec.agent_index) != group.end()) members.push_back(&rec);
  }
  if (members.empty()) throw std::logic_error("group has no answers in the history");
  Tally tally{};
  for (const auto* m : members) ++tally[index_of(m->viewpoint)];
  const std::size_t best = *std::max_element(tally.begin(), tally.end());
  const AnswerRecord* chosen = nullptr;
  for (const auto* m : members) {
    if (tally[index_of(m->viewpoint)] != best) continue;
    if (!chosen || m->agent_index < chosen->agent_index) chosen = m;
  }
  return chosen->agent_index;
}

CmdDiscussion::CmdDiscussion(TaskInstance task, CmdConfig config, AgentFactory agents)
    : task_(std::move(task)), config_(std::move(config)), agents_(std::move(agents)) {
  task_.validate();
  config_.validate();
  group_map_ = gen_group_map(config_.n_agents, config_.tie_mode == TieMode::Secretary,
                             config_.group_size);
  sessions_.reserve(config_.n_agents);
  for (std::size_t i = 0; i < config_.n_agents; ++i) {
    sessions_.push_back(agents_.make(agent_name(i), task_));
    state_.active.push_back(i);
  }
  state_.groups = group_map_.levels[0];
  transcript_.mechanism = "cmd";
  transcript_.task_id = task_.id;
  transcript_.config = to_json(config_);
}

std::vector<Message> opening_messages(const TaskInstance& task, const PromptSpec& prompt,
                                      bool hold_different_views, std::size_t agent) {
  std::optional<Verdict> stance = prompt.hold_view;
  if (hold_different_views) stance = kAllVerdicts[agent % kAllVerdicts.size()];
  std::string user = render_question(task);
  if (stance) user += "\n" + hold_view_instruction(stance);
  return {{Role::System, render_system_prompt(prompt)}, {Role::User, std::move(user)}};
}

std::vector<Message> CmdDiscussion::initial_prompt(std::size_t agent) const {
  return opening_messages(task_, config_.prompt, config_.hold_different_views, agent);
}

std::vector<Message> CmdDiscussion::discussion_prompt(std::size_t agent) const {
  auto digest = visible_opinions(agent, state_.history, state_.groups);
  return {{Role::System, render_discussion_prompt(digest)}, {Role::User, mid_round_instruction()}};
}

void CmdDiscussion::run_round() {
  std::vector<std::vector<Message>> prompts;
  prompts.reserve(state_.active.size());
  const bool initial = state_.level == 0 && state_.round == 0;
  for (std::size_t agent : state_.active) {
    prompts.push_back(initial ? initial_prompt(agent) : discussion_prompt(agent));
  }
  auto records = run_agent_calls(sessions_, state_.active, std::move(prompts), state_.level,
                                 state_.round, config_.scheduling, transcript_);
  transcript_.rounds.push_back(summarize_round(state_.level, state_.round, records));
  state_.history = std::move(records);
  ++state_.round;
}

Verdict CmdDiscussion::resolve_tie_secretary(const VoteResult& vote) {
  std::vector<TiedSide> sides;
  for (Verdict v : vote.tied) {
    const AnswerRecord* sample = nullptr;
    for (const auto& rec : state_.history) {
      if (rec.viewpoint == v && (!sample || rec.agent_index < sample->agent_index)) sample = &rec;
    }
    sides.push_back({v, vote.tally[index_of(v)], sample ? sample->explanation : std::string{}});
  }

  secretary_.emplace(agents_.make("Secretary", task_));
  std::vector<Message> prompt{
      {Role::System, render_secretary_prompt(task_, state_.history.size(), sides)},
      {Role::User, secretary_instruction()}};
  std::string reply = secretary_->infer(prompt, state_.level, state_.round);
  transcript_.calls.push_back({"Secretary", state_.level, state_.round, false, std::move(prompt), reply});
  auto verdict = find_verdict(reply);
  if (!verdict) {
    std::vector<Message> reask{{Role::User, mid_round_instruction()}};
    reply = secretary_->infer(reask, state_.level, state_.round);
    transcript_.calls.push_back({"Secretary", state_.level, state_.round, true, std::move(reask), reply});
    verdict = find_verdict(reply);
  }

  TieEvent event{state_.level, vote.tally, vote.tied, Resolution::Secretary, {}, verdict, {}};
  if (!verdict) {
    event.note = "secretary returned no bracketed verdict after one re-ask";
    transcript_.ties.push_back(std::move(event));
    transcript_.aborted = true;
    transcript_.resolution = Resolution::Unresolved;
    account_sessions(sessions_, transcript_);
    transcript_.call_count += secretary_->calls();
    throw DiscussionAborted("secretary gave no verdict for task '" + task_.id + "'",
                            to_json(transcript_).dump());
  }
  event.note = "secretary adjudicated the tie";
  transcript_.ties.push_back(std::move(event));
  return *verdict;
}

bool CmdDiscussion::resolve_tie_representatives(const VoteResult& vote) {
  if (state_.level >= group_map_.max_level()) return false;

  std::vector<std::size_t> reps;
  for (const auto& group : state_.groups) reps.push_back(pick_representative(group, state_.history));

  std::vector<std::vector<std::size_t>> next_groups;
  for (const auto& slots : group_map_.levels[state_.level + 1]) {
    auto& g = next_groups.emplace_back();
    for (std::size_t lower : slots) g.push_back(reps.at(lower));
    std::sort(g.begin(), g.end());
  }

  TieEvent event{state_.level, vote.tally, vote.tied, Resolution::Representatives, {}, std::nullopt,
                 "representatives continue their sessions at level " +
                     std::to_string(state_.level + 1)};
  for (std::size_t r : reps) event.representatives.push_back(agent_name(r));
  transcript_.ties.push_back(std::move(event));

  std::sort(reps.begin(), reps.end());
  std::vector<AnswerRecord> kept;
  for (auto& rec : state_.history) {
    if (std::binary_search(reps.begin(), reps.end(), rec.agent_index)) kept.push_back(std::move(rec));
  }
  state_.history = std::move(kept);
  state_.active = std::move(reps);
  state_.groups = std::move(next_groups);
  ++state_.level;
  state_.round = 0;
  return true;
}

void CmdDiscussion::finish(Verdict verdict, Resolution resolution) {
  transcript_.final_verdict = verdict;
  transcript_.resolution = resolution;
  account_sessions(sessions_, transcript_);
  if (secretary_) {
    transcript_.call_count += secretary_->calls();
    transcript_.prompt_tokens += secretary_->prompt_tokens();
    transcript_.completion_tokens += secretary_->completion_tokens();
  }
}

DiscussionResult CmdDiscussion::run() {
  while (true) {
    while (state_.round < config_.rounds) run_round();
    const VoteResult v = vote();
    if (v.decided) {
      finish(*v.decided, state_.level == 0 ? Resolution::Vote : Resolution::Representatives);
      break;
    }
    if (config_.tie_mode == TieMode::Secretary) {
      finish(resolve_tie_secretary(v), Resolution::Secretary);
      break;
    }
    if (!resolve_tie_representatives(v)) {
      const auto& first = *std::min_element(
          state_.history.begin(), state_.history.end(),
          [](const AnswerRecord& a, const AnswerRecord& b) { return a.agent_index < b.agent_index; });
      transcript_.ties.push_back({state_.level, v.tally, v.tied, Resolution::Unresolved,
                                  {first.agent_id}, first.viewpoint,
                                  "tie persists at the top level; lowest-id active agent's viewpoint"});
      finish(first.viewpoint, Resolution::Unresolved);
      break;
    }
  }
  return {*transcript_.final_verdict, transcript_.resolution, transcript_};
}

DiscussionResult run_cmd(const TaskInstance& task, const CmdConfig& config,
                         const AgentFactory& agents) {
  return CmdDiscussion(task, config, agents).run();
}

}  // namespace cmdforge
