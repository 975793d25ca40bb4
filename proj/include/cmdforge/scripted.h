#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cmdforge/agent_runtime.h"
#include "cmdforge/verdict.h"

namespace cmdforge {

// Deterministic reply function. Policies must be pure functions of the
// request so that transcripts do not depend on thread scheduling.
using ScriptedPolicy = std::function<std::string(const ChatRequest&)>;

class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(ScriptedPolicy policy);
  ChatReply complete(const ChatRequest& request) override;

 private:
  ScriptedPolicy policy_;
};

ScriptedPolicy constant_policy(std::string reply);

// The k-th reply of a session (k = assistant messages already in its history)
// is replies[k]; PolicyExhausted past the end.
ScriptedPolicy sequence_policy(std::vector<std::string> replies);

// Dispatches on agent id; agents without an entry use fallback (may be empty,
// in which case PolicyExhausted is thrown).
ScriptedPolicy per_agent_policy(std::map<std::string, ScriptedPolicy> policies,
                                ScriptedPolicy fallback = {});

using InitialVerdict = std::function<Verdict(const ChatRequest&)>;

// First reply carries initial(request). Afterwards the agent counts every
// viewpoint sentence in its newest system message plus its own previous
// verdict and adopts a strict plurality; on a tie it keeps its own verdict.
ScriptedPolicy flip_to_majority_policy(InitialVerdict initial);

// Holds initial(request) until base-level round switch_round(request), then
// answers the gold label from the request.
ScriptedPolicy converge_to_gold_policy(InitialVerdict initial,
                                       std::function<std::size_t(const ChatRequest&)> switch_round);

// Reply text of the flip/converge policies. Unique per agent, level, round
// and task so that transcripts can be searched for leaked explanations.
std::string scripted_reply_text(const ChatRequest& request, Verdict v);

// Counts "<N> agent(s) think(s) the proposition is <V>." sentences.
Tally count_viewpoint_sentences(std::string_view text);

// Seeded initial stance: gold with probability p_correct, otherwise one of
// the two other verdicts uniformly. Pure function of its arguments.
Verdict seeded_verdict(std::uint64_t seed, double p_correct, std::string_view task_id,
                       std::string_view agent_id, Verdict gold);

// Uniform in [0, max_round], pure function of its arguments.
std::size_t seeded_round(std::uint64_t seed, std::string_view task_id, std::string_view agent_id,
                         std::size_t max_round);

}  // namespace cmdforge
