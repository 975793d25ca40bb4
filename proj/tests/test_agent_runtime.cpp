#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "cmdforge/agent_runtime.h"
#include "cmdforge/cassette.h"
#include "cmdforge/errors.h"
#include "cmdforge/scripted.h"
#include "support/fixtures.h"

using namespace cmdforge;
using nlohmann::json;

namespace {

std::shared_ptr<Backend> echo_backend() {
  return std::make_shared<ScriptedBackend>([](const ChatRequest& r) {
    return "reply " + std::to_string(r.messages.size()) + " [Correct]";
  });
}

std::string completion_body(const std::string& text) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}},
              {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 5}}}}
      .dump();
}

// Local chat-completions endpoint whose behaviour is scripted per request.
class MockServer {
 public:
  explicit MockServer(std::function<void(const httplib::Request&, httplib::Response&, int)> handler)
      : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++hits_;
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      handler_(req, res, n);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }
  int hits() const { return hits_; }
  std::string last_body() const { return last_body_; }
  std::string last_auth() const { return last_auth_; }

 private:
  httplib::Server server_;
  std::function<void(const httplib::Request&, httplib::Response&, int)> handler_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::string last_body_, last_auth_;
};

BackendConfig fast_config(const std::string& endpoint) {
  BackendConfig c;
  c.endpoint = endpoint;
  c.api_key = "sk-test";
  c.backoff_initial = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(2000);
  return c;
}

ChatRequest simple_request() {
  ChatRequest r;
  r.agent_id = "A";
  r.messages = {{Role::System, "sys"}, {Role::User, "question"}};
  return r;
}

}  // namespace

TEST(CallBudget, ExhaustsExactly) {
  CallBudget b(3);
  b.acquire();
  b.acquire();
  b.acquire();
  EXPECT_THROW(b.acquire(), BudgetExceeded);
  EXPECT_EQ(b.used(), 3u);
  EXPECT_THROW(CallBudget(0), ConfigError);
}

TEST(CallBudget, ConcurrentAcquireNeverOvershoots) {
  auto b = std::make_shared<CallBudget>(1000);
  std::atomic<int> granted{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 200; ++i) {
        try {
          b->acquire();
          ++granted;
        } catch (const BudgetExceeded&) {
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(granted.load(), 1000);
  EXPECT_EQ(b->used(), 1000u);
}

TEST(CallBudget, ChildDrawsFromParent) {
  auto parent = std::make_shared<CallBudget>(2);
  CallBudget child(100, parent);
  child.acquire();
  child.acquire();
  EXPECT_THROW(child.acquire(), BudgetExceeded);
  EXPECT_EQ(parent->used(), 2u);
}

TEST(AgentSession, HistoryGrowsOnlyOnSuccess) {
  AgentSession s("A", "scripted", echo_backend(), std::make_shared<CallBudget>(10));
  EXPECT_EQ(s.infer({{Role::System, "s"}, {Role::User, "u"}}), "reply 2 [Correct]");
  EXPECT_EQ(s.history().size(), 3u);
  EXPECT_EQ(s.history().back().role, Role::Assistant);
  EXPECT_EQ(s.infer({{Role::User, "again"}}), "reply 4 [Correct]");
  EXPECT_EQ(s.history().size(), 5u);
  EXPECT_EQ(s.calls(), 2u);

  AgentSession failing("B", "scripted",
                       std::make_shared<ScriptedBackend>([](const ChatRequest&) -> std::string {
                         throw TransportError("down");
                       }),
                       std::make_shared<CallBudget>(10));
  EXPECT_THROW(failing.infer({{Role::User, "u"}}), TransportError);
  EXPECT_TRUE(failing.history().empty());
}

TEST(AgentSession, RejectsBadMessageLists) {
  AgentSession s("A", "scripted", echo_backend(), std::make_shared<CallBudget>(10));
  EXPECT_THROW(s.infer({}), std::invalid_argument);
  EXPECT_THROW(s.infer({{Role::Assistant, "x"}}), std::invalid_argument);
}

TEST(AgentSession, EmptyCompletionIsMalformed) {
  AgentSession s("A", "scripted", std::make_shared<ScriptedBackend>(constant_policy("")),
                 std::make_shared<CallBudget>(10));
  EXPECT_THROW(s.infer({{Role::User, "u"}}), MalformedResponse);
}

TEST(AgentSession, BudgetStopsCalls) {
  AgentSession s("A", "scripted", echo_backend(), std::make_shared<CallBudget>(1));
  s.infer({{Role::User, "u"}});
  EXPECT_THROW(s.infer({{Role::User, "u"}}), BudgetExceeded);
}

TEST(ScriptedPolicies, SequenceByReplyCount) {
  AgentSession s("A", "scripted", std::make_shared<ScriptedBackend>(sequence_policy({"one", "two"})),
                 std::make_shared<CallBudget>(10));
  EXPECT_EQ(s.infer({{Role::User, "u"}}), "one");
  EXPECT_EQ(s.infer({{Role::User, "u"}}), "two");
  EXPECT_THROW(s.infer({{Role::User, "u"}}), PolicyExhausted);
}

TEST(ScriptedPolicies, FlipToMajorityCountsSentences) {
  auto policy = flip_to_majority_policy([](const ChatRequest&) { return Verdict::Correct; });
  ChatRequest r = simple_request();
  EXPECT_EQ(find_verdict(policy(r)), Verdict::Correct);
  r.messages.push_back({Role::Assistant, "mine [Correct]"});
  r.messages.push_back({Role::System, "Three agents think the proposition is Incorrect.\n"
                                      "One agent thinks the proposition is Correct."});
  r.messages.push_back({Role::User, "update"});
  EXPECT_EQ(find_verdict(policy(r)), Verdict::Incorrect);
  r.messages[3].content = "One agent thinks the proposition is Incorrect.";
  EXPECT_EQ(find_verdict(policy(r)), Verdict::Correct);  // 1-1 tie keeps own view
  EXPECT_EQ(count_viewpoint_sentences("Two agents think the proposition is Unknown. "
                                      "13 agents think the proposition is Correct."),
            (Tally{13, 0, 2}));
}

TEST(ScriptedPolicies, SeededHelpersArePure) {
  EXPECT_EQ(seeded_verdict(5, 0.5, "t", "A", Verdict::Correct),
            seeded_verdict(5, 0.5, "t", "A", Verdict::Correct));
  EXPECT_EQ(seeded_verdict(5, 1.0, "t", "A", Verdict::Unknown), Verdict::Unknown);
  EXPECT_NE(seeded_verdict(5, 0.0, "t", "A", Verdict::Unknown), Verdict::Unknown);
  for (int i = 0; i < 20; ++i) EXPECT_LE(seeded_round(i, "t", "A", 2), 2u);
}

TEST(Cassette, RecordThenReplay) {
  fixtures::TempDir dir;
  const auto path = dir.path() / "c.jsonl";
  auto recorder = std::make_shared<RecordingBackend>(echo_backend(), Cassette::open(path), "m", 0.25);
  const ChatRequest r = simple_request();
  const std::string first = recorder->complete(r).text;

  auto replay = ReplayBackend(Cassette::open(path), "m", 0.25);
  EXPECT_EQ(replay.complete(r).text, first);

  ChatRequest other = r;
  other.agent_id = "B";
  EXPECT_THROW(replay.complete(other), TransportError);
  EXPECT_THROW(ReplayBackend(Cassette::open(path), "m", 0.5).complete(r), TransportError);
  EXPECT_NE(request_digest(r, "m", 0.25), request_digest(other, "m", 0.25));
}

TEST(ChatCompletions, RequestBodyShape) {
  BackendConfig c;
  const json body = ChatCompletionsBackend::request_body(c, {{Role::System, "s"}, {Role::User, "u"}});
  EXPECT_EQ(body.at("model"), "gpt-35-turbo-0613");
  EXPECT_DOUBLE_EQ(body.at("temperature").get<double>(), 0.25);
  EXPECT_EQ(body.at("messages")[1].at("role"), "user");
  EXPECT_EQ(body.at("messages")[0].at("content"), "s");
}

TEST(ChatCompletions, ParseResponse) {
  auto reply = ChatCompletionsBackend::parse_response(completion_body("so it is [Incorrect]"));
  EXPECT_EQ(reply.text, "so it is [Incorrect]");
  EXPECT_EQ(reply.prompt_tokens, 11u);
  EXPECT_THROW(ChatCompletionsBackend::parse_response("{}"), MalformedResponse);
  EXPECT_THROW(ChatCompletionsBackend::parse_response("not json"), MalformedResponse);
}

TEST(ChatCompletions, SuccessAgainstLocalServer) {
  MockServer server([](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(completion_body("ok [Correct]"), "application/json");
  });
  ChatCompletionsBackend backend(fast_config(server.endpoint()));
  const ChatReply reply = backend.complete(simple_request());
  EXPECT_EQ(reply.text, "ok [Correct]");
  EXPECT_EQ(server.hits(), 1);
  EXPECT_EQ(server.last_auth(), "Bearer sk-test");
  EXPECT_EQ(json::parse(server.last_body()).at("messages").size(), 2u);
}

TEST(ChatCompletions, RetriesServerErrorsAndRateLimits) {
  MockServer server([](const httplib::Request&, httplib::Response& res, int n) {
    if (n == 1) {
      res.status = 500;
    } else if (n == 2) {
      res.status = 429;
    } else {
      res.set_content(completion_body("third time [Unknown]"), "application/json");
    }
  });
  ChatCompletionsBackend backend(fast_config(server.endpoint()));
  EXPECT_EQ(backend.complete(simple_request()).text, "third time [Unknown]");
  EXPECT_EQ(server.hits(), 3);
}

TEST(ChatCompletions, GivesUpAfterMaxRetries) {
  MockServer server([](const httplib::Request&, httplib::Response& res, int) { res.status = 503; });
  ChatCompletionsBackend backend(fast_config(server.endpoint()));
  EXPECT_THROW(backend.complete(simple_request()), TransportError);
  EXPECT_EQ(server.hits(), 4);
}

TEST(ChatCompletions, ClientErrorsAreNotRetried) {
  MockServer server([](const httplib::Request&, httplib::Response& res, int) { res.status = 401; });
  ChatCompletionsBackend backend(fast_config(server.endpoint()));
  EXPECT_THROW(backend.complete(simple_request()), TransportError);
  EXPECT_EQ(server.hits(), 1);
}

TEST(ChatCompletions, MalformedBodyIsReported) {
  MockServer server([](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(R"({"choices": []})", "application/json");
  });
  ChatCompletionsBackend backend(fast_config(server.endpoint()));
  EXPECT_THROW(backend.complete(simple_request()), MalformedResponse);
}

TEST(ChatCompletions, UnreachableEndpoint) {
  BackendConfig c = fast_config("http://127.0.0.1:1/v1/chat/completions");
  c.max_retries = 1;
  ChatCompletionsBackend backend(c);
  EXPECT_THROW(backend.complete(simple_request()), TransportError);
}

TEST(BackendConfig, Validation) {
  BackendConfig c;
  c.temperature = 3.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = BackendConfig{};
  c.max_retries = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = BackendConfig{};
  c.endpoint = "no-scheme";
  EXPECT_THROW(ChatCompletionsBackend{c}, ConfigError);
}
