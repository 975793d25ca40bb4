#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmdforge/discussion.h"
#include "cmdforge/prompt_forge.h"

namespace cmdforge {

enum class TieMode { Secretary, Representatives };

std::string_view to_string(TieMode mode);

// Group structure of every discussion level. levels[0][g] lists the agent
// indices of base group g; levels[L][g] for L > 0 lists indices of
// level-(L-1) groups whose representatives meet in group g.
struct GroupMap {
  std::vector<std::vector<std::vector<std::size_t>>> levels;

  std::size_t max_level() const { return levels.size() - 1; }
  std::size_t group_count(std::size_t level) const { return levels.at(level).size(); }
};

// Base groups of group_size in agent-id order. With secretary_mode only the
// base level exists; otherwise representatives are grouped the same way
// until a level has a single group.
GroupMap gen_group_map(std::size_t n, bool secretary_mode, std::size_t group_size = 3);

struct CmdConfig {
  std::size_t n_agents = 6;
  // Rounds per level. Base-level round 0 produces the initial answers.
  std::size_t rounds = 3;
  std::size_t group_size = 3;
  TieMode tie_mode = TieMode::Secretary;
  // Cycles Correct/Incorrect/Unknown over agents in id order for the first
  // prompt. Overrides prompt.hold_view.
  bool hold_different_views = false;
  PromptSpec prompt = PromptSpec::all_features();
  RoundScheduling scheduling;

  void validate() const;
};

nlohmann::json to_json(const CmdConfig& config);

// System prompt plus question for an agent's first call. With
// hold_different_views the stance cycles Correct/Incorrect/Unknown by index;
// otherwise prompt.hold_view applies to every agent.
std::vector<Message> opening_messages(const TaskInstance& task, const PromptSpec& prompt,
                                      bool hold_different_views, std::size_t agent);

// Runtime state of one discussion.
struct DiscussionState {
  std::size_t level = 0;
  std::size_t round = 0;
  std::vector<std::size_t> active;               // agent indices, ascending
  std::vector<std::vector<std::size_t>> groups;  // active agents per group at this level
  std::vector<AnswerRecord> history;             // last completed round only
};

// Opinions of the previous round visible to `agent`: full answers from its
// own group, viewpoint counts from every other group. Throws
// std::invalid_argument when the agent is not active.
OpinionDigest visible_opinions(std::size_t agent, const std::vector<AnswerRecord>& previous,
                               const std::vector<std::vector<std::size_t>>& groups);

// The agent holding the group's plurality viewpoint; ties inside the group
// go to the lowest agent id holding one of the tied viewpoints.
std::size_t pick_representative(const std::vector<std::size_t>& group,
                                 const std::vector<AnswerRecord>& history);

struct DiscussionResult {
  Verdict verdict;
  Resolution resolution;
  Transcript transcript;
};

class CmdDiscussion {
 public:
  CmdDiscussion(TaskInstance task, CmdConfig config, AgentFactory agents);

  const DiscussionState& state() const { return state_; }
  const GroupMap& group_map() const { return group_map_; }
  const Transcript& transcript() const { return transcript_; }
  Transcript& transcript() { return transcript_; }
  const std::vector<AgentSession>& sessions() const { return sessions_; }

  // One round for every active agent; replaces the history.
  void run_round();

  VoteResult vote() const { return answer_vote(state_.history); }

  // Secretary adjudication of a tied vote. Throws DiscussionAborted when the
  // secretary gives no bracketed verdict after one re-ask.
  Verdict resolve_tie_secretary(const VoteResult& vote);

  // Promotes one representative per group to the next level and resets the
  // round counter. Returns false when the top level is already reached.
  bool resolve_tie_representatives(const VoteResult& vote);

  // Runs every stage to completion.
  DiscussionResult run();

 private:
  std::vector<Message> initial_prompt(std::size_t agent) const;
  std::vector<Message> discussion_prompt(std::size_t agent) const;
  void finish(Verdict verdict, Resolution resolution);

  TaskInstance task_;
  CmdConfig config_;
  AgentFactory agents_;
  GroupMap group_map_;
  DiscussionState state_;
  std::vector<AgentSession> sessions_;
  std::optional<AgentSession> secretary_;
  Transcript transcript_;
};

DiscussionResult run_cmd(const TaskInstance& task, const CmdConfig& config,
                         const AgentFactory& agents);

}  // namespace cmdforge
