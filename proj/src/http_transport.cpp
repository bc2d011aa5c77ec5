#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "cfinc/error.hpp"
#include "cfinc/gateway.hpp"

namespace cfinc::gateway {
using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint URL needs a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string join_path(const std::string& base, const std::string& suffix) {
  if (suffix.empty()) return base;
  if (!base.empty() && base.back() == '/') return base.substr(0, base.size() - 1) + suffix;
  return base + suffix;
}

std::string text_of_content(const json& content) {
  if (content.is_string()) return content.get<std::string>();
  std::string out;
  if (content.is_array()) {
    for (const auto& part : content) {
      if (part.is_object() && part.value("type", "") == "text") out += part.value("text", "");
    }
  }
  return out;
}

}  // namespace

json normalize_chat_completion(const json& reply) {
  try {
    const auto& message = reply.at("choices").at(0).at("message");
    json out = {{"text", text_of_content(message.at("content"))},
                {"backend_id", reply.value("model", "")},
                {"input_tokens", 0},
                {"output_tokens", 0}};
    if (reply.contains("usage") && reply["usage"].is_object()) {
      out["input_tokens"] = reply["usage"].value("prompt_tokens", 0);
      out["output_tokens"] = reply["usage"].value("completion_tokens", 0);
    }
    return out;
  } catch (const json::exception& ex) {
    throw BackendError(std::string("malformed chat completion: ") + ex.what());
  }
}

json normalize_clip_reply(const json& reply) {
  try {
    const auto& scores = reply.at("scores");
    if (scores.size() != 1) throw BackendError("clip_score: expected exactly one score");
    return {{"score", scores.at(0).get<double>()}, {"model_id", reply.value("model_id", "")}};
  } catch (const json::exception& ex) {
    throw BackendError(std::string("malformed clip_score reply: ") + ex.what());
  }
}

json normalize_nli_reply(const json& reply) {
  try {
    const auto& scores = reply.at("scores");
    if (scores.size() != 1) throw BackendError("nli: expected exactly one triple");
    const auto& t = scores.at(0);
    json out;
    if (t.is_array()) {
      out = {{"entailment", t.at(0)}, {"neutral", t.at(1)}, {"contradiction", t.at(2)}};
    } else {
      out = {{"entailment", t.at("entailment")},
             {"neutral", t.at("neutral")},
             {"contradiction", t.at("contradiction")}};
    }
    out["model_id"] = reply.value("model_id", "");
    return out;
  } catch (const json::exception& ex) {
    throw BackendError(std::string("malformed nli reply: ") + ex.what());
  }
}

HttpTransport::HttpTransport(BackendConfig config, EnvLookup env)
    : config_(std::move(config)), env_(std::move(env)) {}

json HttpTransport::send(const WireRequest& request) {
  httplib::Headers headers;
  if (!config_.auth_env_var.empty()) {
    const auto token = env_(config_.auth_env_var);
    if (!token || token->empty()) {
      throw AuthError("environment variable " + config_.auth_env_var + " is not set");
    }
    headers.emplace("Authorization", "Bearer " + *token);
  }

  const auto url = split_url(config_.endpoint_url);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const std::string body = request.body().dump();
  const auto res = client.Post(join_path(url.path, request.path), headers, body, "application/json");
  if (!res) {
    throw TransportError("HTTP request to " + config_.endpoint_url + " failed: " +
                         httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 401 || status == 403) {
    throw AuthError("backend rejected credentials (HTTP " + std::to_string(status) + ")");
  }
  if (status == 408 || status == 429 || status >= 500) {
    throw TransportError("backend returned HTTP " + std::to_string(status));
  }
  if (status < 200 || status >= 300) {
    throw BackendError("backend returned HTTP " + std::to_string(status) + ": " +
                       res->body.substr(0, 200));
  }
  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception& ex) {
    throw BackendError(std::string("backend reply is not JSON: ") + ex.what());
  }
  switch (request.kind) {
    case BackendKind::chat: return normalize_chat_completion(reply);
    case BackendKind::visual_scorer: return normalize_clip_reply(reply);
    case BackendKind::nli_scorer: return normalize_nli_reply(reply);
  }
  throw BackendError("unknown backend kind");
}

}  // namespace cfinc::gateway
