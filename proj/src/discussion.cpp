#include "cmdforge/discussion.h"

#include <algorithm>
#include <exception>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "cmdforge/errors.h"

namespace cmdforge {

std::string agent_name(std::size_t index) {
  std::string name;
  std::size_t n = index + 1;
  while (n > 0) {
    --n;
    name.insert(name.begin(), static_cast<char>('A' + n % 26));
    n /= 26;
  }
  return name;
}

VoteResult answer_vote(const std::vector<AnswerRecord>& history) {
  if (history.empty()) throw std::invalid_argument("cannot vote on an empty history");
  VoteResult result;
  for (const auto& rec : history) ++result.tally[index_of(rec.viewpoint)];
  const std::size_t best = *std::max_element(result.tally.begin(), result.tally.end());
  for (Verdict v : kAllVerdicts) {
    if (result.tally[index_of(v)] == best) result.tied.push_back(v);
  }
  if (result.tied.size() == 1) {
    result.decided = result.tied.front();
    result.tied.clear();
  }
  return result;
}

std::string_view to_string(Resolution r) {
  switch (r) {
    case Resolution::Vote:            return "vote";
    case Resolution::Secretary:       return "secretary";
    case Resolution::Representatives: return "representatives";
    case Resolution::Unresolved:      return "unresolved";
  }
  return "unresolved";
}

std::vector<std::optional<Verdict>> Transcript::base_round_majorities() const {
  std::vector<std::optional<Verdict>> out;
  for (const auto& r : rounds) {
    if (r.level != 0 || r.answers.empty()) continue;
    out.push_back(answer_vote(r.answers).decided);
  }
  return out;
}

namespace {

nlohmann::json tally_json(const Tally& t) {
  return {{"Correct", t[0]}, {"Incorrect", t[1]}, {"Unknown", t[2]}};
}

nlohmann::json verdicts_json(const std::vector<Verdict>& vs) {
  nlohmann::json out = nlohmann::json::array();
  for (Verdict v : vs) out.push_back(to_string(v));
  return out;
}

}  // namespace

nlohmann::json to_json(const Transcript& t) {
  nlohmann::json calls = nlohmann::json::array();
  for (const auto& c : t.calls) {
    nlohmann::json prompt = nlohmann::json::array();
    for (const auto& m : c.prompt) prompt.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    calls.push_back({{"agent", c.agent_id},
                     {"level", c.level},
                     {"round", c.round},
                     {"reask", c.reask},
                     {"prompt", std::move(prompt)},
                     {"reply", c.reply}});
  }
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : t.rounds) {
    nlohmann::json answers = nlohmann::json::array();
    for (const auto& a : r.answers) {
      answers.push_back({{"agent", a.agent_id},
                         {"viewpoint", to_string(a.viewpoint)},
                         {"flagged", a.flagged}});
    }
    rounds.push_back({{"level", r.level},
                      {"round", r.round},
                      {"tally", tally_json(r.tally)},
                      {"answers", std::move(answers)}});
  }
  nlohmann::json ties = nlohmann::json::array();
  for (const auto& e : t.ties) {
    nlohmann::json je{{"level", e.level},
                      {"tally", tally_json(e.tally)},
                      {"tied", verdicts_json(e.tied)},
                      {"action", to_string(e.action)},
                      {"representatives", e.representatives},
                      {"note", e.note}};
    je["verdict"] = e.verdict ? nlohmann::json(to_string(*e.verdict)) : nlohmann::json(nullptr);
    ties.push_back(std::move(je));
  }
  nlohmann::json out{{"mechanism", t.mechanism},
                     {"task_id", t.task_id},
                     {"config", t.config},
                     {"calls", std::move(calls)},
                     {"rounds", std::move(rounds)},
                     {"ties", std::move(ties)},
                     {"resolution", to_string(t.resolution)},
                     {"aborted", t.aborted},
                     {"accounting",
                      {{"calls", t.call_count},
                       {"prompt_tokens", t.prompt_tokens},
                       {"completion_tokens", t.completion_tokens}}}};
  out["final_verdict"] =
      t.final_verdict ? nlohmann::json(to_string(*t.final_verdict)) : nlohmann::json(nullptr);
  return out;
}

AgentSession AgentFactory::make(const std::string& agent_id, const TaskInstance& task) const {
  return AgentSession(agent_id, model_label, backend, budget, task.id, task.gold);
}

namespace {

struct AgentOutcome {
  std::vector<CallRecord> calls;
  AnswerRecord record;
  std::exception_ptr error;
};

AgentOutcome run_one(AgentSession& session, std::size_t agent_index,
                     std::vector<Message> prompt, std::size_t level, std::size_t round) {
  AgentOutcome out;
  try {
    out.record.agent_id = session.agent_id();
    out.record.agent_index = agent_index;
    out.record.level = level;
    out.record.round = round;

    std::string reply = session.infer(prompt, level, round);
    out.calls.push_back({session.agent_id(), level, round, false, std::move(prompt), reply});
    auto verdict = find_verdict(reply);
    if (!verdict) {
      std::vector<Message> reask{{Role::User, mid_round_instruction()}};
      reply = session.infer(reask, level, round);
      out.calls.push_back({session.agent_id(), level, round, true, std::move(reask), reply});
      verdict = find_verdict(reply);
    }
    out.record.explanation = reply;
    if (verdict) {
      out.record.viewpoint = *verdict;
    } else {
      out.record.viewpoint = Verdict::Unknown;
      out.record.flagged = true;
    }
  } catch (...) {
    out.error = std::current_exception();
  }
  return out;
}

}  // namespace

std::vector<AnswerRecord> run_agent_calls(std::vector<AgentSession>& sessions,
                                          const std::vector<std::size_t>& active,
                                          std::vector<std::vector<Message>> prompts,
                                          std::size_t level, std::size_t round,
                                          const RoundScheduling& scheduling,
                                          Transcript& transcript) {
  if (prompts.size() != active.size()) throw std::invalid_argument("one prompt per active agent");
  std::vector<AgentOutcome> outcomes(active.size());

  if (scheduling.parallel && active.size() > 1) {
    std::vector<std::size_t> order(active.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (scheduling.dispatch_seed) {
      std::mt19937_64 engine(*scheduling.dispatch_seed + 0x9e3779b97f4a7c15ULL * (level * 131 + round));
      std::shuffle(order.begin(), order.end(), engine);
    }
    std::vector<std::thread> workers;
    workers.reserve(order.size());
    for (std::size_t k : order) {
      workers.emplace_back([&, k] {
        outcomes[k] = run_one(sessions[active[k]], active[k], std::move(prompts[k]), level, round);
      });
    }
    for (auto& w : workers) w.join();
  } else {
    for (std::size_t k = 0; k < active.size(); ++k) {
      outcomes[k] = run_one(sessions[active[k]], active[k], std::move(prompts[k]), level, round);
    }
  }

  std::vector<AnswerRecord> records;
  records.reserve(outcomes.size());
  for (auto& o : outcomes) {
    if (o.error) std::rethrow_exception(o.error);
    for (auto& c : o.calls) transcript.calls.push_back(std::move(c));
    records.push_back(std::move(o.record));
  }
  return records;
}

RoundSummary summarize_round(std::size_t level, std::size_t round,
                             const std::vector<AnswerRecord>& records) {
  RoundSummary s;
  s.level = level;
  s.round = round;
  for (const auto& r : records) ++s.tally[index_of(r.viewpoint)];
  s.answers = records;
  return s;
}

void account_sessions(const std::vector<AgentSession>& sessions, Transcript& transcript) {
  for (const auto& s : sessions) {
    transcript.call_count += s.calls();
    transcript.prompt_tokens += s.prompt_tokens();
    transcript.completion_tokens += s.completion_tokens();
  }
}

}  // namespace cmdforge
