#include "cmdforge/run_config.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "cmdforge/cassette.h"
#include "cmdforge/digest.h"
#include "cmdforge/errors.h"

namespace cmdforge {

std::string_view to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::Cmd:         return "cmd";
    case MechanismKind::Debate:      return "debate";
    case MechanismKind::SingleAgent: return "single_agent";
  }
  return "cmd";
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::Live:     return "live";
    case BackendKind::Scripted: return "scripted";
    case BackendKind::Cassette: return "cassette";
    case BackendKind::Record:   return "record";
  }
  return "scripted";
}

namespace {

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

MechanismKind parse_mechanism_kind(const std::string& s) {
  if (s == "cmd") return MechanismKind::Cmd;
  if (s == "debate") return MechanismKind::Debate;
  if (s == "single_agent") return MechanismKind::SingleAgent;
  throw ConfigError("unknown mechanism '" + s + "'");
}

BackendKind parse_backend_kind(const std::string& s) {
  if (s == "live") return BackendKind::Live;
  if (s == "scripted") return BackendKind::Scripted;
  if (s == "cassette") return BackendKind::Cassette;
  if (s == "record") return BackendKind::Record;
  throw ConfigError("unknown backend kind '" + s + "'");
}

TieMode parse_tie_mode(const std::string& s) {
  if (s == "secretary") return TieMode::Secretary;
  if (s == "representatives") return TieMode::Representatives;
  throw ConfigError("unknown tie_mode '" + s + "'");
}

Verdict parse_verdict_name(const nlohmann::json& j, const std::string& where) {
  auto v = verdict_from_string(j.get<std::string>());
  if (!v) throw ConfigError("invalid verdict '" + j.get<std::string>() + "' in " + where);
  return *v;
}

PromptSpec parse_prompt(const nlohmann::json& j) {
  reject_unknown(j, {"step_by_step", "task_description", "response_format", "one_shot", "hold_view"},
                 "prompt");
  PromptSpec p{false, false, false, false, std::nullopt};
  p.step_by_step = j.value("step_by_step", false);
  p.task_description = j.value("task_description", false);
  p.response_format = j.value("response_format", false);
  p.one_shot = j.value("one_shot", false);
  if (j.contains("hold_view") && !j["hold_view"].is_null()) {
    p.hold_view = parse_verdict_name(j["hold_view"], "prompt.hold_view");
  }
  return p;
}

nlohmann::json prompt_json(const PromptSpec& p) {
  nlohmann::json j{{"step_by_step", p.step_by_step},
                   {"task_description", p.task_description},
                   {"response_format", p.response_format},
                   {"one_shot", p.one_shot}};
  j["hold_view"] = p.hold_view ? nlohmann::json(to_string(*p.hold_view)) : nlohmann::json(nullptr);
  return j;
}

std::chrono::milliseconds seconds(double s, const std::string& where) {
  if (!(s >= 0) || !std::isfinite(s)) throw ConfigError(where + " must be a non-negative number");
  return std::chrono::milliseconds(static_cast<long long>(std::llround(s * 1000.0)));
}

InitialVerdict make_initial(const nlohmann::json& j) {
  if (j.is_string()) {
    Verdict v = parse_verdict_name(j, "script.initial");
    return [v](const ChatRequest&) { return v; };
  }
  if (!j.is_object()) throw ConfigError("script.initial must be a verdict or an object");
  if (j.contains("seed")) {
    reject_unknown(j, {"seed", "p_correct"}, "script.initial");
    const auto seed = j.at("seed").get<std::uint64_t>();
    const double p = j.value("p_correct", 0.5);
    if (p < 0.0 || p > 1.0) throw ConfigError("script.initial.p_correct must be in [0, 1]");
    return [seed, p](const ChatRequest& r) {
      if (!r.oracle_gold) throw PolicyExhausted("seeded initial verdict needs the task's gold label");
      return seeded_verdict(seed, p, r.task_id, r.agent_id, *r.oracle_gold);
    };
  }
  std::map<std::string, Verdict> table;
  std::optional<Verdict> fallback;
  for (const auto& [agent, value] : j.items()) {
    Verdict v = parse_verdict_name(value, "script.initial." + agent);
    if (agent == "default") {
      fallback = v;
    } else {
      table[agent] = v;
    }
  }
  return [table, fallback](const ChatRequest& r) {
    if (auto it = table.find(r.agent_id); it != table.end()) return it->second;
    if (fallback) return *fallback;
    throw PolicyExhausted("no initial verdict for agent " + r.agent_id);
  };
}

}  // namespace

ScriptedPolicy make_policy(const nlohmann::json& script) {
  try {
    if (!script.is_object()) throw ConfigError("backend.script must be an object");
    const std::string policy = script.value("policy", std::string{});
    ScriptedPolicy base;
    if (policy == "constant") {
      reject_unknown(script, {"policy", "reply", "verdict", "secretary"}, "script");
      if (script.contains("reply")) {
        base = constant_policy(script["reply"].get<std::string>());
      } else {
        Verdict v = parse_verdict_name(script.at("verdict"), "script.verdict");
        base = [v](const ChatRequest& r) { return scripted_reply_text(r, v); };
      }
    } else if (policy == "sequence") {
      reject_unknown(script, {"policy", "replies", "secretary"}, "script");
      std::map<std::string, ScriptedPolicy> per_agent;
      ScriptedPolicy fallback;
      for (const auto& [agent, replies] : script.at("replies").items()) {
        auto p = sequence_policy(replies.get<std::vector<std::string>>());
        if (agent == "default") {
          fallback = std::move(p);
        } else {
          per_agent[agent] = std::move(p);
        }
      }
      base = per_agent_policy(std::move(per_agent), std::move(fallback));
    } else if (policy == "flip_to_majority") {
      reject_unknown(script, {"policy", "initial", "secretary"}, "script");
      base = flip_to_majority_policy(make_initial(script.at("initial")));
    } else if (policy == "converge_to_gold") {
      reject_unknown(script, {"policy", "initial", "switch_round", "secretary"}, "script");
      const auto& sw = script.at("switch_round");
      std::function<std::size_t(const ChatRequest&)> switch_round;
      if (sw.is_number_unsigned()) {
        const auto k = sw.get<std::size_t>();
        switch_round = [k](const ChatRequest&) { return k; };
      } else {
        reject_unknown(sw, {"seed", "max"}, "script.switch_round");
        const auto seed = sw.at("seed").get<std::uint64_t>();
        const auto max = sw.at("max").get<std::size_t>();
        switch_round = [seed, max](const ChatRequest& r) {
          return seeded_round(seed, r.task_id, r.agent_id, max);
        };
      }
      base = converge_to_gold_policy(make_initial(script.at("initial")), std::move(switch_round));
    } else {
      throw ConfigError("unknown script policy '" + policy + "'");
    }

    if (script.contains("secretary")) {
      return per_agent_policy({{"Secretary", make_policy(script["secretary"])}}, std::move(base));
    }
    return base;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid backend.script: ") + e.what());
  }
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  try {
    reject_unknown(j, {"mechanism", "n_agents", "rounds", "group_size", "tie_mode",
                       "hold_different_views", "prompt", "concurrency", "backend"},
                   "config");
    RunConfig c;
    c.mechanism = parse_mechanism_kind(j.value("mechanism", std::string("cmd")));
    const PromptSpec prompt =
        j.contains("prompt") ? parse_prompt(j["prompt"]) : PromptSpec::all_features();
    const bool hold = j.value("hold_different_views", false);

    RoundScheduling scheduling;
    if (j.contains("concurrency")) {
      const auto& cj = j["concurrency"];
      reject_unknown(cj, {"parallel_agents", "dispatch_seed", "workers"}, "concurrency");
      scheduling.parallel = cj.value("parallel_agents", false);
      if (cj.contains("dispatch_seed") && !cj["dispatch_seed"].is_null()) {
        scheduling.dispatch_seed = cj["dispatch_seed"].get<std::uint64_t>();
      }
      c.workers = cj.value("workers", std::size_t{1});
      if (c.workers == 0) throw ConfigError("concurrency.workers must be at least 1");
    }

    switch (c.mechanism) {
      case MechanismKind::Cmd:
        c.cmd.n_agents = j.value("n_agents", std::size_t{6});
        c.cmd.rounds = j.value("rounds", std::size_t{3});
        c.cmd.group_size = j.value("group_size", std::size_t{3});
        c.cmd.tie_mode = parse_tie_mode(j.value("tie_mode", std::string("secretary")));
        c.cmd.hold_different_views = hold;
        c.cmd.prompt = prompt;
        c.cmd.scheduling = scheduling;
        c.cmd.validate();
        break;
      case MechanismKind::Debate:
        c.baseline.kind = BaselineKind::Debate;
        c.baseline.n_agents = j.value("n_agents", std::size_t{3});
        c.baseline.rounds = j.value("rounds", std::size_t{3});
        c.baseline.hold_different_views = hold;
        c.baseline.prompt = prompt;
        c.baseline.scheduling = scheduling;
        c.baseline.validate();
        break;
      case MechanismKind::SingleAgent:
        c.baseline = BaselineConfig::single_agent(prompt);
        c.baseline.n_agents = j.value("n_agents", std::size_t{1});
        c.baseline.rounds = j.value("rounds", std::size_t{1});
        c.baseline.hold_different_views = hold;
        c.baseline.scheduling = scheduling;
        c.baseline.validate();
        break;
    }

    const nlohmann::json bj = j.value("backend", nlohmann::json::object());
    reject_unknown(bj, {"kind", "endpoint", "model", "api_key", "temperature", "max_retries",
                        "timeout_s", "backoff_s", "budget", "cassette", "script"},
                   "backend");
    c.backend_kind = parse_backend_kind(bj.value("kind", std::string("scripted")));
    c.backend.endpoint = bj.value("endpoint", c.backend.endpoint);
    c.backend.model = bj.value("model", c.backend.model);
    if (bj.contains("api_key") && bj["api_key"].is_string()) c.backend.api_key = bj["api_key"];
    c.backend.temperature = bj.value("temperature", c.backend.temperature);
    c.backend.max_retries = bj.value("max_retries", c.backend.max_retries);
    c.backend.timeout = seconds(bj.value("timeout_s", 60.0), "backend.timeout_s");
    c.backend.backoff_initial = seconds(bj.value("backoff_s", 1.0), "backend.backoff_s");
    c.backend.budget = bj.value("budget", c.backend.budget);
    if (bj.contains("cassette") && !bj["cassette"].is_null()) {
      c.cassette = bj["cassette"].get<std::string>();
    }
    c.script = bj.value("script", nlohmann::json());
    c.backend.validate();

    const bool needs_cassette = c.backend_kind == BackendKind::Cassette ||
                                c.backend_kind == BackendKind::Record;
    if (needs_cassette && c.cassette.empty()) {
      throw ConfigError("backend kind '" + std::string(to_string(c.backend_kind)) +
                        "' requires backend.cassette");
    }
    if (c.backend_kind == BackendKind::Scripted) {
      if (c.script.is_null()) throw ConfigError("scripted backend requires backend.script");
      make_policy(c.script);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

std::size_t RunConfig::agent_count() const {
  return mechanism == MechanismKind::Cmd ? cmd.n_agents : baseline.n_agents;
}

nlohmann::json RunConfig::to_json(bool include_secrets) const {
  nlohmann::json j;
  j["mechanism"] = to_string(mechanism);
  const RoundScheduling* scheduling = nullptr;
  if (mechanism == MechanismKind::Cmd) {
    j["n_agents"] = cmd.n_agents;
    j["rounds"] = cmd.rounds;
    j["group_size"] = cmd.group_size;
    j["tie_mode"] = to_string(cmd.tie_mode);
    j["hold_different_views"] = cmd.hold_different_views;
    j["prompt"] = prompt_json(cmd.prompt);
    scheduling = &cmd.scheduling;
  } else {
    j["n_agents"] = baseline.n_agents;
    j["rounds"] = baseline.rounds;
    j["hold_different_views"] = baseline.hold_different_views;
    j["prompt"] = prompt_json(baseline.prompt);
    scheduling = &baseline.scheduling;
  }
  j["concurrency"] = {{"parallel_agents", scheduling->parallel}, {"workers", workers}};
  j["concurrency"]["dispatch_seed"] =
      scheduling->dispatch_seed ? nlohmann::json(*scheduling->dispatch_seed) : nlohmann::json(nullptr);

  nlohmann::json b{{"kind", to_string(backend_kind)},
                   {"endpoint", backend.endpoint},
                   {"model", backend.model},
                   {"temperature", backend.temperature},
                   {"max_retries", backend.max_retries},
                   {"timeout_s", backend.timeout.count() / 1000.0},
                   {"backoff_s", backend.backoff_initial.count() / 1000.0},
                   {"budget", backend.budget}};
  if (include_secrets) {
    b["api_key"] = backend.api_key;
  } else {
    b["api_key"] = backend.api_key.empty() ? "" : "<redacted>";
  }
  b["cassette"] = cassette.empty() ? nlohmann::json(nullptr) : nlohmann::json(cassette.string());
  b["script"] = script;
  j["backend"] = std::move(b);
  return j;
}

std::string RunConfig::digest() const {
  nlohmann::json j = to_json(false);
  j.erase("concurrency");
  return sha256_hex(j.dump());
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  nlohmann::json* node = &doc;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) {
    if (key.empty()) throw ConfigError("override key '" + path + "' has an empty segment");
    keys.push_back(key);
  }
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->is_object()) throw ConfigError("override key '" + path + "' crosses a non-object");
    node = &(*node)[keys[i]];
    if (node->is_null()) *node = nlohmann::json::object();
  }
  if (!node->is_object()) throw ConfigError("override key '" + path + "' crosses a non-object");
  (*node)[keys.back()] = std::move(value);
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  for (const auto& o : overrides) apply_override(doc, o);
  // Relative cassette paths resolve against the config file's directory.
  if (doc.contains("backend") && doc["backend"].is_object() && doc["backend"].contains("cassette") &&
      doc["backend"]["cassette"].is_string()) {
    std::filesystem::path cassette = doc["backend"]["cassette"].get<std::string>();
    if (cassette.is_relative()) {
      doc["backend"]["cassette"] = (path.parent_path() / cassette).lexically_normal().string();
    }
  }
  if (const char* key = std::getenv("CMD_FORGE_API_KEY"); key && *key) {
    if (!doc.contains("backend")) doc["backend"] = nlohmann::json::object();
    doc["backend"]["api_key"] = key;
  }
  return RunConfig::from_json(doc);
}

Runtime make_runtime(const RunConfig& config) {
  Runtime rt;
  rt.budget = std::make_shared<CallBudget>(config.backend.budget);
  switch (config.backend_kind) {
    case BackendKind::Live:
      rt.backend = std::make_shared<ChatCompletionsBackend>(config.backend);
      break;
    case BackendKind::Scripted:
      rt.backend = std::make_shared<ScriptedBackend>(make_policy(config.script));
      break;
    case BackendKind::Cassette:
      if (!std::filesystem::exists(config.cassette)) {
        throw ConfigError("cassette file " + config.cassette.string() + " does not exist");
      }
      rt.backend = std::make_shared<ReplayBackend>(Cassette::open(config.cassette),
                                                   config.backend.model, config.backend.temperature);
      break;
    case BackendKind::Record: {
      std::shared_ptr<Backend> inner;
      if (config.script.is_null()) {
        inner = std::make_shared<ChatCompletionsBackend>(config.backend);
      } else {
        inner = std::make_shared<ScriptedBackend>(make_policy(config.script));
      }
      rt.backend = std::make_shared<RecordingBackend>(inner, Cassette::open(config.cassette),
                                                      config.backend.model,
                                                      config.backend.temperature);
      break;
    }
  }
  rt.agents = AgentFactory{rt.backend, rt.budget, config.backend.model};
  return rt;
}

DiscussionResult run_case(const RunConfig& config, const TaskInstance& task,
                          const AgentFactory& agents) {
  nlohmann::json snapshot = config.to_json(false);
  snapshot.erase("concurrency");
  switch (config.mechanism) {
    case MechanismKind::Cmd: {
      CmdDiscussion discussion(task, config.cmd, agents);
      discussion.transcript().config = snapshot;
      return discussion.run();
    }
    case MechanismKind::Debate: {
      auto result = run_debate(task, config.baseline, agents);
      result.transcript.config = snapshot;
      return result;
    }
    case MechanismKind::SingleAgent: {
      auto result = run_single_agent(task, config.baseline, agents);
      result.transcript.config = snapshot;
      return result;
    }
  }
  throw ConfigError("unknown mechanism");
}

TaskInstance load_task(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot read task file " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DatasetError("task file " + path.string() + " is not valid JSON");
  TaskInstance task = task_from_json(j);
  task.validate();
  return task;
}

}  // namespace cmdforge
