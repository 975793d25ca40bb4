#include "cmdforge/scripted.h"

#include <random>
#include <regex>

#include "cmdforge/digest.h"
#include "cmdforge/errors.h"
#include "cmdforge/prompt_forge.h"

namespace cmdforge {

namespace {

std::size_t replies_so_far(const ChatRequest& request) {
  std::size_t n = 0;
  for (const auto& m : request.messages) n += m.role == Role::Assistant;
  return n;
}

std::optional<Verdict> previous_verdict(const ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == Role::Assistant) return find_verdict(it->content);
  }
  return std::nullopt;
}

const Message* newest_system(const ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == Role::Assistant) return nullptr;
    if (it->role == Role::System) return &*it;
  }
  return nullptr;
}

std::mt19937_64 seeded_engine(std::uint64_t seed, std::string_view task_id,
                              std::string_view agent_id, std::string_view salt) {
  const std::string digest = sha256_hex(std::to_string(seed) + '\x1f' + std::string(task_id) +
                                        '\x1f' + std::string(agent_id) + '\x1f' +
                                        std::string(salt));
  std::seed_seq seq(digest.begin(), digest.end());
  return std::mt19937_64(seq);
}

}  // namespace

ScriptedBackend::ScriptedBackend(ScriptedPolicy policy) : policy_(std::move(policy)) {
  if (!policy_) throw ConfigError("scripted backend requires a policy");
}

ChatReply ScriptedBackend::complete(const ChatRequest& request) {
  std::string text = policy_(request);
  std::size_t prompt_chars = 0;
  for (const auto& m : request.messages) prompt_chars += m.content.size();
  // Rough accounting so token totals are exercised offline.
  return {std::move(text), prompt_chars / 4, 0};
}

ScriptedPolicy constant_policy(std::string reply) {
  return [reply = std::move(reply)](const ChatRequest&) { return reply; };
}

ScriptedPolicy sequence_policy(std::vector<std::string> replies) {
  return [replies = std::move(replies)](const ChatRequest& request) {
    const std::size_t k = replies_so_far(request);
    if (k >= replies.size()) {
      throw PolicyExhausted("scripted sequence for agent " + request.agent_id + " has only " +
                            std::to_string(replies.size()) + " replies");
    }
    return replies[k];
  };
}

ScriptedPolicy per_agent_policy(std::map<std::string, ScriptedPolicy> policies,
                                ScriptedPolicy fallback) {
  return [policies = std::move(policies), fallback = std::move(fallback)](const ChatRequest& request) {
    if (auto it = policies.find(request.agent_id); it != policies.end()) return it->second(request);
    if (fallback) return fallback(request);
    throw PolicyExhausted("no scripted policy for agent " + request.agent_id);
  };
}

std::string scripted_reply_text(const ChatRequest& request, Verdict v) {
  return "Agent " + request.agent_id + " (level " + std::to_string(request.level) + ", round " +
         std::to_string(request.round) + ", case " + request.task_id +
         "): weighing the premises and the visible opinions, the proposition is [" +
         std::string(to_string(v)) + "].";
}

Tally count_viewpoint_sentences(std::string_view text) {
  static const std::regex kSentence(
      R"(\b([A-Za-z0-9]+) agents? thinks? the proposition is (Correct|Incorrect|Unknown)\.)");
  Tally tally{};
  std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kSentence); it != std::sregex_iterator();
       ++it) {
    auto count = parse_count_word((*it)[1].str());
    auto verdict = verdict_from_string((*it)[2].str());
    if (count && verdict) tally[index_of(*verdict)] += *count;
  }
  return tally;
}

ScriptedPolicy flip_to_majority_policy(InitialVerdict initial) {
  return [initial = std::move(initial)](const ChatRequest& request) {
    auto own = previous_verdict(request);
    if (!own) return scripted_reply_text(request, initial(request));

    Tally tally{};
    if (const Message* sys = newest_system(request)) tally = count_viewpoint_sentences(sys->content);
    tally[index_of(*own)] += 1;

    Verdict choice = *own;
    std::size_t best = 0, holders = 0;
    for (Verdict v : kAllVerdicts) {
      if (tally[index_of(v)] > best) {
        best = tally[index_of(v)];
        choice = v;
        holders = 1;
      } else if (tally[index_of(v)] == best) {
        ++holders;
      }
    }
    if (holders > 1) choice = *own;
    return scripted_reply_text(request, choice);
  };
}

ScriptedPolicy converge_to_gold_policy(InitialVerdict initial,
                                       std::function<std::size_t(const ChatRequest&)> switch_round) {
  return [initial = std::move(initial), switch_round = std::move(switch_round)](
             const ChatRequest& request) {
    if (!request.oracle_gold) {
      throw PolicyExhausted("converge-to-gold policy needs the task's gold label");
    }
    const bool switched = request.level > 0 || request.round >= switch_round(request);
    return scripted_reply_text(request, switched ? *request.oracle_gold : initial(request));
  };
}

Verdict seeded_verdict(std::uint64_t seed, double p_correct, std::string_view task_id,
                       std::string_view agent_id, Verdict gold) {
  auto engine = seeded_engine(seed, task_id, agent_id, "verdict");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(engine) < p_correct) return gold;
  std::vector<Verdict> wrong;
  for (Verdict v : kAllVerdicts) {
    if (v != gold) wrong.push_back(v);
  }
  std::uniform_int_distribution<std::size_t> pick(0, wrong.size() - 1);
  return wrong[pick(engine)];
}

std::size_t seeded_round(std::uint64_t seed, std::string_view task_id, std::string_view agent_id,
                         std::size_t max_round) {
  auto engine = seeded_engine(seed, task_id, agent_id, "round");
  std::uniform_int_distribution<std::size_t> pick(0, max_round);
  return pick(engine);
}

}  // namespace cmdforge
