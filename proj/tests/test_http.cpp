// Client side of the HTTP contracts, against an in-process fake server.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <gtest/gtest.h>

#include <thread>

#include "cfinc/error.hpp"
#include "cfinc/gateway.hpp"
#include "cfinc/util.hpp"
#include "support.hpp"

using namespace cfinc;
using namespace cfinc::gateway;
using nlohmann::json;

namespace {

class FakeServer {
 public:
  FakeServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

EnvLookup env_with(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const std::string& k) -> std::optional<std::string> {
    auto it = vars.find(k);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

BackendConfig live(BackendKind kind, std::string url) {
  BackendConfig c;
  c.kind = kind;
  c.endpoint_url = std::move(url);
  c.timeout = std::chrono::milliseconds(2000);
  c.initial_backoff = std::chrono::milliseconds(1);
  return c;
}

ChatRequest hello() {
  ChatRequest r;
  r.model_id = "gpt-test";
  r.messages.push_back({Role::user, "hello", std::nullopt});
  return r;
}

}  // namespace

TEST(Http, ChatCompletionWithBearerToken) {
  FakeServer fake;
  std::string auth;
  json received;
  fake.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    received = json::parse(req.body);
    res.set_content(json{{"model", "gpt-test-0613"},
                         {"choices", {{{"message", {{"role", "assistant"}, {"content", "Yes."}}}}}},
                         {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 2}}}}
                        .dump(),
                    "application/json");
  });
  auto cfg = live(BackendKind::chat, fake.base() + "/v1/chat/completions");
  cfg.auth_env_var = "TEST_KEY";
  Gateway gw({Channel::from_config(cfg, env_with({{"TEST_KEY", "sk-123"}})), {}, {}, {}});
  const auto r = gw.chat(hello());
  EXPECT_EQ(r.text, "Yes.");
  EXPECT_EQ(r.backend_id, "gpt-test-0613");
  EXPECT_EQ(r.tokens.input, 12);
  EXPECT_EQ(r.tokens.output, 2);
  EXPECT_EQ(auth, "Bearer sk-123");
  EXPECT_EQ(received["model"], "gpt-test");
  EXPECT_EQ(received["messages"][0]["content"], "hello");
  EXPECT_EQ(received["temperature"], 0.0);
}

TEST(Http, MissingTokenIsAuthError) {
  auto cfg = live(BackendKind::chat, "http://127.0.0.1:9/v1/chat/completions");
  cfg.auth_env_var = "TEST_KEY";
  Gateway gw({Channel::from_config(cfg, env_with({})), {}, {}, {}});
  EXPECT_THROW(gw.chat(hello()), AuthError);
}

TEST(Http, UnauthorizedIsNotRetried) {
  FakeServer fake;
  int hits = 0;
  fake.server().Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  Gateway gw({Channel::from_config(live(BackendKind::chat, fake.base() + "/chat")), {}, {}, {}});
  EXPECT_THROW(gw.chat(hello()), AuthError);
  EXPECT_EQ(hits, 1);
}

TEST(Http, ServerErrorsAreRetried) {
  FakeServer fake;
  int hits = 0;
  fake.server().Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
    if (++hits < 3) {
      res.status = hits == 1 ? 503 : 429;
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"late"}}]})", "application/json");
  });
  Gateway gw({Channel::from_config(live(BackendKind::chat, fake.base() + "/chat")), {}, {}, {}},
             GatewayOptions{4, std::nullopt, [](std::chrono::milliseconds) {}});
  EXPECT_EQ(gw.chat(hello()).text, "late");
  EXPECT_EQ(hits, 3);
  EXPECT_EQ(gw.stats().retries, 2u);
}

TEST(Http, ClientErrorsAndBadBodies) {
  FakeServer fake;
  fake.server().Post("/bad", [](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content("nope", "text/plain");
  });
  fake.server().Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html>", "text/html");
  });
  Gateway bad({Channel::from_config(live(BackendKind::chat, fake.base() + "/bad")), {}, {}, {}});
  EXPECT_THROW(bad.chat(hello()), BackendError);
  Gateway garbage(
      {Channel::from_config(live(BackendKind::chat, fake.base() + "/garbage")), {}, {}, {}});
  EXPECT_THROW(garbage.chat(hello()), BackendError);
}

TEST(Http, ConnectionRefusedIsTransportError) {
  auto cfg = live(BackendKind::chat, "http://127.0.0.1:9/chat");
  cfg.max_retries = 1;
  Gateway gw({Channel::from_config(cfg), {}, {}, {}},
             GatewayOptions{4, std::nullopt, [](std::chrono::milliseconds) {}});
  EXPECT_THROW(gw.chat(hello()), TransportError);
  EXPECT_EQ(gw.stats().retries, 1u);
}

TEST(Http, ClipScoreContract) {
  FakeServer fake;
  json received;
  fake.server().Post("/svc/clip_score", [&](const httplib::Request& req, httplib::Response& res) {
    received = json::parse(req.body);
    res.set_content(R"({"scores":[0.27],"model_id":"clip-vit-large-patch14-336"})",
                    "application/json");
  });
  Channels ch;
  ch.clip = Channel::from_config(live(BackendKind::visual_scorer, fake.base() + "/svc"));
  Gateway gw(ch);
  const auto img = testkit::mini_image("street.png");
  EXPECT_DOUBLE_EQ(gw.clip_score(img, "bicycle"), 0.27);
  EXPECT_EQ(received["texts"], json::array({"bicycle"}));
  EXPECT_EQ(received["image"], util::base64_encode(testkit::slurp(img)));
}

TEST(Http, NliContract) {
  FakeServer fake;
  json received;
  fake.server().Post("/nli", [&](const httplib::Request& req, httplib::Response& res) {
    received = json::parse(req.body);
    res.set_content(R"({"scores":[[0.05,0.05,0.9]],"model_id":"roberta-base-rte"})",
                    "application/json");
  });
  Channels ch;
  ch.nli = Channel::from_config(live(BackendKind::nli_scorer, fake.base() + "/"));
  Gateway gw(ch);
  const auto s = gw.nli("dog", "spaceship");
  EXPECT_NEAR(s.contradiction(), 0.9, 1e-12);
  EXPECT_NEAR(s.entailment(), 0.05, 1e-12);
  EXPECT_EQ(received, (json{{"pairs", {{{"premise", "dog"}, {"hypothesis", "spaceship"}}}}}));
}

TEST(Http, ScorerReplyShapeIsChecked) {
  EXPECT_THROW(normalize_clip_reply(json{{"scores", {0.1, 0.2}}}), BackendError);
  EXPECT_THROW(normalize_clip_reply(json{{"score", 0.1}}), BackendError);
  EXPECT_THROW(normalize_nli_reply(json{{"scores", json::array()}}), BackendError);
  const auto named = normalize_nli_reply(
      json{{"scores", {{{"entailment", 0.1}, {"neutral", 0.2}, {"contradiction", 0.7}}}}});
  EXPECT_EQ(named["contradiction"], 0.7);
  const auto multi = normalize_chat_completion(json{
      {"choices", {{{"message", {{"content", {{{"type", "text"}, {"text", "a"}},
                                              {{"type", "text"}, {"text", "b"}}}}}}}}}});
  EXPECT_EQ(multi["text"], "ab");
  EXPECT_THROW(normalize_chat_completion(json{{"choices", json::array()}}), BackendError);
}
