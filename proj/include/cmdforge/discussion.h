#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmdforge/agent_runtime.h"
#include "cmdforge/prompt_forge.h"
#include "cmdforge/verdict.h"

namespace cmdforge {

// "A", "B", ..., "Z", "AA", "AB", ...
std::string agent_name(std::size_t index);

// Ans_i = (viewpoint, explanation) of one agent in one round.
struct AnswerRecord {
  std::string agent_id;
  std::size_t agent_index = 0;
  std::size_t level = 0;
  std::size_t round = 0;
  Verdict viewpoint = Verdict::Unknown;
  std::string explanation;
  // Set when no bracketed verdict could be parsed even after one re-ask; the
  // viewpoint is then Unknown.
  bool flagged = false;
};

struct VoteResult {
  Tally tally{};
  std::optional<Verdict> decided;  // set iff a strictly maximal count exists
  std::vector<Verdict> tied;       // verdicts sharing the maximal count on a tie

  bool is_tie() const { return !decided.has_value(); }
  std::size_t voters() const { return tally[0] + tally[1] + tally[2]; }
};

// Unweighted plurality over the viewpoints of one round. Throws
// std::invalid_argument on an empty history.
VoteResult answer_vote(const std::vector<AnswerRecord>& history);

enum class Resolution { Vote, Secretary, Representatives, Unresolved };

std::string_view to_string(Resolution r);

struct CallRecord {
  std::string agent_id;
  std::size_t level = 0;
  std::size_t round = 0;
  bool reask = false;
  std::vector<Message> prompt;  // messages newly sent with this call
  std::string reply;
};

struct RoundSummary {
  std::size_t level = 0;
  std::size_t round = 0;
  Tally tally{};
  std::vector<AnswerRecord> answers;  // agent-id order
};

struct TieEvent {
  std::size_t level = 0;
  Tally tally{};
  std::vector<Verdict> tied;
  Resolution action = Resolution::Unresolved;
  std::vector<std::string> representatives;
  std::optional<Verdict> verdict;
  std::string note;
};

struct Transcript {
  std::string mechanism;  // "cmd", "debate" or "single_agent"
  std::string task_id;
  nlohmann::json config;
  std::vector<CallRecord> calls;
  std::vector<RoundSummary> rounds;
  std::vector<TieEvent> ties;
  std::optional<Verdict> final_verdict;
  Resolution resolution = Resolution::Vote;
  bool aborted = false;
  std::size_t call_count = 0;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;

  // Plurality of each base-level round's viewpoints; nullopt on a tie.
  std::vector<std::optional<Verdict>> base_round_majorities() const;
};

nlohmann::json to_json(const Transcript& transcript);

// Intra-round execution of agent calls. Results are always committed in
// agent-id order; dispatch_seed only permutes the launch order of the
// parallel calls.
struct RoundScheduling {
  bool parallel = false;
  std::optional<std::uint64_t> dispatch_seed;
};

// Creates a fresh session per agent and task instance.
struct AgentFactory {
  std::shared_ptr<Backend> backend;
  std::shared_ptr<CallBudget> budget;
  std::string model_label = "scripted";

  AgentSession make(const std::string& agent_id, const TaskInstance& task) const;
};

// Sends prompts[k] to sessions[active[k]] for every k, re-asking once with
// the mid-round instruction when a reply carries no verdict. Appends the
// calls to the transcript in agent-id order and returns the round's records.
std::vector<AnswerRecord> run_agent_calls(std::vector<AgentSession>& sessions,
                                          const std::vector<std::size_t>& active,
                                          std::vector<std::vector<Message>> prompts,
                                          std::size_t level, std::size_t round,
                                          const RoundScheduling& scheduling,
                                          Transcript& transcript);

RoundSummary summarize_round(std::size_t level, std::size_t round,
                             const std::vector<AnswerRecord>& records);

// Copies per-session call and token counts into the transcript.
void account_sessions(const std::vector<AgentSession>& sessions, Transcript& transcript);

}  // namespace cmdforge
