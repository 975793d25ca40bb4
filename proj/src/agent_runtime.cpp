#include "cmdforge/agent_runtime.h"

#include "cmdforge/errors.h"

namespace cmdforge {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System:    return "system";
    case Role::User:      return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

CallBudget::CallBudget(std::size_t limit) : limit_(limit) {
  if (limit_ == 0) throw ConfigError("call budget must be positive");
}

CallBudget::CallBudget(std::size_t limit, std::shared_ptr<CallBudget> parent)
    : CallBudget(limit) {
  parent_ = std::move(parent);
}

void CallBudget::acquire() {
  if (parent_) parent_->acquire();
  std::size_t current = used_.load();
  do {
    if (current >= limit_) {
      throw BudgetExceeded("call budget of " + std::to_string(limit_) + " exhausted");
    }
  } while (!used_.compare_exchange_weak(current, current + 1));
}

void BackendConfig::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ConfigError("temperature must lie in [0, 2]");
  }
  if (budget == 0) throw ConfigError("budget must be positive");
  if (max_retries < 0) throw ConfigError("max_retries must be non-negative");
}

AgentSession::AgentSession(std::string agent_id, std::string model_label,
                           std::shared_ptr<Backend> backend, std::shared_ptr<CallBudget> budget,
                           std::string task_id, std::optional<Verdict> oracle_gold)
    : agent_id_(std::move(agent_id)),
      model_label_(std::move(model_label)),
      backend_(std::move(backend)),
      budget_(std::move(budget)),
      task_id_(std::move(task_id)),
      oracle_gold_(oracle_gold) {
  if (!backend_) throw ConfigError("session requires a backend");
  if (!budget_) throw ConfigError("session requires a call budget");
}

std::string AgentSession::infer(std::vector<Message> new_messages, std::size_t level,
                                std::size_t round) {
  if (new_messages.empty() || new_messages.back().role == Role::Assistant) {
    throw std::invalid_argument("infer needs at least one trailing system/user message");
  }
  budget_->acquire();
  ++calls_;

  ChatRequest request;
  request.agent_id = agent_id_;
  request.task_id = task_id_;
  request.level = level;
  request.round = round;
  request.oracle_gold = oracle_gold_;
  request.messages = history_;
  request.messages.insert(request.messages.end(), new_messages.begin(), new_messages.end());

  ChatReply reply = backend_->complete(request);
  if (reply.text.empty()) throw MalformedResponse("empty completion for agent " + agent_id_);

  prompt_tokens_ += reply.prompt_tokens;
  completion_tokens_ += reply.completion_tokens;
  history_ = std::move(request.messages);
  history_.push_back({Role::Assistant, reply.text});
  return reply.text;
}

}  // namespace cmdforge
