#include <thread>

#if __has_include(<openssl/ssl.h>) && defined(CMDFORGE_WITH_OPENSSL)
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include "cmdforge/agent_runtime.h"
#include "cmdforge/errors.h"

namespace cmdforge {

namespace {

// Splits "https://host:port/v1/chat/completions" into base and path.
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint must include a scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

ChatCompletionsBackend::ChatCompletionsBackend(BackendConfig config) : config_(std::move(config)) {
  config_.validate();
  std::tie(base_url_, path_) = split_endpoint(config_.endpoint);
}

nlohmann::json ChatCompletionsBackend::request_body(const BackendConfig& config,
                                                    const std::vector<Message>& messages) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return {{"model", config.model}, {"messages", msgs}, {"temperature", config.temperature}};
}

ChatReply ChatCompletionsBackend::parse_response(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedResponse(std::string("completion is not JSON: ") + e.what());
  }
  try {
    ChatReply reply;
    reply.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
      reply.prompt_tokens = usage->value("prompt_tokens", std::size_t{0});
      reply.completion_tokens = usage->value("completion_tokens", std::size_t{0});
    }
    return reply;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("completion lacks choices[0].message.content: ") +
                            e.what());
  }
}

ChatReply ChatCompletionsBackend::complete(const ChatRequest& request) {
  const std::string body = request_body(config_, request.messages).dump();

  httplib::Client client(base_url_);
  const auto timeout_s = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto timeout_us =
      std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - timeout_s);
  client.set_connection_timeout(timeout_s.count(), timeout_us.count());
  client.set_read_timeout(timeout_s.count(), timeout_us.count());
  client.set_write_timeout(timeout_s.count(), timeout_us.count());

  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
    headers.emplace("api-key", config_.api_key);
  }

  std::string last_error;
  auto backoff = config_.backoff_initial;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto result = client.Post(path_, headers, body, "application/json");
    if (!result) {
      last_error = "transport failure: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 200 && result->status < 300) return parse_response(result->body);
    last_error = "HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 200);
    if (!retryable(result->status)) break;
  }
  throw TransportError("chat completion for agent " + request.agent_id + " failed: " + last_error);
}

}  // namespace cmdforge
