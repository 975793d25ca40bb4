#include "support/fixtures.h"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include <algorithm>
#include <map>

#include "cmdforge/errors.h"
#include "support/oracles.h"

namespace fixtures {

using namespace cmdforge;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string golden(const std::string& name) {
  std::string text = read_file(std::filesystem::path(CMDFORGE_GOLDEN_DIR) / name);
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      out += '\n';
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      out += text[i];
    }
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

TaskInstance neocrepidodera_task() {
  TaskInstance t;
  t.id = "neocrepidodera";
  t.premises = {"Neocrepidodera Corpulentas are flea beetles or moths.",
                "The species Neocrepidodera Corpulenta is in the Chrysomelidae family.",
                "There are no moths within the Chrysomelidae family."};
  t.proposition = "There are no flea beetles within the Chrysomelidae family.";
  t.gold = Verdict::Incorrect;
  return t;
}

TaskInstance ibm_task() {
  TaskInstance t;
  t.id = "ibm-office";
  t.premises = {"Evangelos Eleftheriou is a Greek electrical engineer.",
                "Evangelos Eleftheriou worked for IBM in Zurich.",
                "If a company has employees working for them somewhere, then they have an office there.",
                "IBM is a company."};
  t.proposition = "IBM has an office in London or Zurich.";
  t.gold = Verdict::Correct;
  return t;
}

AgentFactory scripted_agents(ScriptedPolicy policy, std::size_t budget) {
  return AgentFactory{std::make_shared<ScriptedBackend>(std::move(policy)),
                      std::make_shared<CallBudget>(budget), "scripted"};
}

InitialVerdict initial_from(const std::vector<Verdict>& verdicts) {
  std::map<std::string, Verdict> table;
  for (std::size_t i = 0; i < verdicts.size(); ++i) table[agent_name(i)] = verdicts[i];
  return [table](const ChatRequest& r) {
    auto it = table.find(r.agent_id);
    if (it == table.end()) throw PolicyExhausted("no initial verdict for " + r.agent_id);
    return it->second;
  };
}

ScriptedPolicy flip_policy(const std::vector<Verdict>& initial, Verdict secretary) {
  return per_agent_policy(
      {{"Secretary", [secretary](const ChatRequest& r) { return scripted_reply_text(r, secretary); }}},
      flip_to_majority_policy(initial_from(initial)));
}

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("cmdforge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
           std::to_string(rd()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

namespace {
using Groups = std::vector<std::vector<std::size_t>>;
}  // namespace

bool mentions(const CallRecord& call, const std::string& text) {
  for (const auto& m : call.prompt) {
    if (m.content.find(text) != std::string::npos) return true;
  }
  return false;
}

VisibilityReport check_visibility(const cmdforge::Transcript& t, std::size_t n, std::size_t rounds) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[agent_name(i)] = i;
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  std::map<std::size_t, Groups> groups{{0, oracle::chunks(all, 3)}};
  for (const auto& tie : t.ties) {
    if (tie.action != Resolution::Representatives) continue;
    std::vector<std::size_t> reps;
    for (const auto& name : tie.representatives) reps.push_back(index.at(name));
    groups[tie.level + 1] = oracle::chunks(reps, 3);
  }
  auto round_of = [&](std::size_t level, std::size_t round) -> const RoundSummary* {
    for (const auto& r : t.rounds) {
      if (r.level == level && r.round == round) return &r;
    }
    return nullptr;
  };

  VisibilityReport report;
  for (const auto& call : t.calls) {
    if (call.agent_id == "Secretary" || call.reask) continue;
    if (call.level == 0 && call.round == 0) continue;
    const RoundSummary* previous =
        call.round > 0 ? round_of(call.level, call.round - 1) : round_of(call.level - 1, rounds - 1);
    if (!previous) {
      ++report.leaks;
      continue;
    }
    const std::size_t me = index.at(call.agent_id);
    std::vector<std::size_t> mine;
    for (const auto& g : groups.at(call.level)) {
      if (std::find(g.begin(), g.end(), me) != g.end()) mine = g;
    }
    for (const auto& a : previous->answers) {
      if (a.agent_index == me) continue;
      const bool same_group = std::find(mine.begin(), mine.end(), a.agent_index) != mine.end();
      const bool active = std::any_of(groups.at(call.level).begin(), groups.at(call.level).end(),
                                      [&](const auto& g) {
                                        return std::find(g.begin(), g.end(), a.agent_index) != g.end();
                                      });
      ++report.checked;
      if (!same_group && mentions(call, a.explanation)) ++report.leaks;
      if (same_group && active && !mentions(call, a.explanation)) ++report.missing;
    }
  }
  return report;
}


}  // namespace fixtures
