#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmdforge/verdict.h"

namespace cmdforge {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);

struct Message {
  Role role;
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

// One completion request. The tags (agent, task, level, round) never reach a
// live endpoint; they key cassettes and drive scripted policies.
struct ChatRequest {
  std::string agent_id;
  std::string task_id;
  std::size_t level = 0;
  std::size_t round = 0;
  // Gold label of the task, visible only to scripted test substrates.
  std::optional<Verdict> oracle_gold;
  std::vector<Message> messages;
};

struct ChatReply {
  std::string text;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

// Safe for concurrent use by several sessions.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatReply complete(const ChatRequest& request) = 0;
};

// Upper bound on inference calls in one run, shared by every session.
class CallBudget {
 public:
  explicit CallBudget(std::size_t limit);
  // A child budget also draws every call from its parent.
  CallBudget(std::size_t limit, std::shared_ptr<CallBudget> parent);

  // Reserves one call or throws BudgetExceeded.
  void acquire();
  std::size_t used() const { return used_.load(); }
  std::size_t limit() const { return limit_; }

 private:
  std::size_t limit_;
  std::atomic<std::size_t> used_{0};
  std::shared_ptr<CallBudget> parent_;
};

struct BackendConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-35-turbo-0613";
  std::string api_key;
  double temperature = 0.25;
  int max_retries = 3;
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds backoff_initial{1000};
  std::size_t budget = 100000;

  // temperature in [0, 2], budget > 0, max_retries >= 0.
  void validate() const;
};

// OpenAI-compatible chat-completions client. Retries transport failures,
// 429 and 5xx with exponential backoff (backoff_initial, doubled per retry).
class ChatCompletionsBackend : public Backend {
 public:
  explicit ChatCompletionsBackend(BackendConfig config);

  ChatReply complete(const ChatRequest& request) override;

  static nlohmann::json request_body(const BackendConfig& config,
                                     const std::vector<Message>& messages);
  // Extracts choices[0].message.content and usage; throws MalformedResponse.
  static ChatReply parse_response(std::string_view body);

 private:
  BackendConfig config_;
  std::string base_url_;
  std::string path_;
};

// Conversation of one agent with its backend for one task instance. Single
// owner; history only grows.
class AgentSession {
 public:
  AgentSession(std::string agent_id, std::string model_label, std::shared_ptr<Backend> backend,
               std::shared_ptr<CallBudget> budget, std::string task_id = {},
               std::optional<Verdict> oracle_gold = std::nullopt);

  // Appends new_messages and the reply to the history and returns the reply
  // verbatim. History is untouched when the call fails.
  std::string infer(std::vector<Message> new_messages, std::size_t level = 0,
                    std::size_t round = 0);

  const std::string& agent_id() const { return agent_id_; }
  const std::string& model_label() const { return model_label_; }
  const std::vector<Message>& history() const { return history_; }
  std::size_t calls() const { return calls_; }
  std::size_t prompt_tokens() const { return prompt_tokens_; }
  std::size_t completion_tokens() const { return completion_tokens_; }

 private:
  std::string agent_id_;
  std::string model_label_;
  std::shared_ptr<Backend> backend_;
  std::shared_ptr<CallBudget> budget_;
  std::string task_id_;
  std::optional<Verdict> oracle_gold_;
  std::vector<Message> history_;
  std::size_t calls_ = 0;
  std::size_t prompt_tokens_ = 0;
  std::size_t completion_tokens_ = 0;
};

}  // namespace cmdforge
