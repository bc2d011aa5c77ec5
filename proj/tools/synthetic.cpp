#include "synthetic.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "cfinc/error.hpp"
#include "cfinc/keywordgen.hpp"
#include "cfinc/util.hpp"

namespace cfinc::synthetic {
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IOFailure("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double jitter(std::string_view a, std::string_view b) {
  const auto h = util::fnv1a64(std::string(a) + "\n" + std::string(b));
  return static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53);
}

double round6(double x) { return std::round(x * 1e6) / 1e6; }

std::string between(const std::string& text, std::string_view open, std::string_view close) {
  const auto a = text.find(open);
  if (a == std::string::npos) return {};
  const auto start = a + open.size();
  const auto b = text.find(close, start);
  return text.substr(start, b == std::string::npos ? std::string::npos : b - start);
}

json chat_reply(const std::string& text) {
  return {{"text", text},
          {"backend_id", "synthetic"},
          {"input_tokens", 0},
          {"output_tokens", static_cast<std::int64_t>(text.size() / 4)}};
}

}  // namespace

Backend::Backend(const fs::path& script_path, const fs::path& image_dir)
    : script_(json::parse(read_file(script_path))) {
  for (const auto& e : fs::directory_iterator(image_dir)) {
    if (!e.is_regular_file()) continue;
    image_by_b64_[util::base64_encode(read_file(e.path()))] = e.path().filename().string();
  }
  for (const auto& [image, reply] : script_.at("keywords").items()) {
    const auto lists = keywords::parse_keyword_lists(reply.get<std::string>(), 5);
    for (std::size_t s = 0; s < lists.counterfactuals.size(); ++s) {
      for (const auto& k : lists.counterfactuals[s]) {
        iterations_[image].emplace(util::to_lower(k), static_cast<int>(s + 1));
      }
    }
  }
}

double Backend::visual_score(int iteration, std::string_view image, std::string_view text) {
  return round6(0.16 + 0.035 * iteration + 0.1 * jitter(image, text));
}

double Backend::contradiction(int iteration, std::string_view premise, std::string_view hypothesis) {
  return round6(0.975 - 0.012 * iteration - 0.07 * jitter(premise, hypothesis));
}

std::string Backend::image_name(const std::string& base64) const {
  const auto it = image_by_b64_.find(base64);
  if (it == image_by_b64_.end()) throw BackendError("synthetic backend: unknown image");
  return it->second;
}

int Backend::iteration_of(const std::string& image, const std::string& keyword) const {
  const auto key = util::to_lower(keyword);
  if (!image.empty()) {
    if (auto it = iterations_.find(image); it != iterations_.end()) {
      if (auto k = it->second.find(key); k != it->second.end()) return k->second;
    }
  }
  for (const auto& [img, words] : iterations_) {
    if (auto k = words.find(key); k != words.end()) return k->second;
  }
  return 3;
}

json Backend::respond(const gateway::WireRequest& request) const {
  const auto body = request.body();
  switch (request.kind) {
    case gateway::BackendKind::chat: return chat(body);
    case gateway::BackendKind::visual_scorer: return clip(body);
    case gateway::BackendKind::nli_scorer: return nli(body);
  }
  throw BackendError("synthetic backend: unknown request kind");
}

json Backend::chat(const json& body) const {
  const auto& messages = body.at("messages");
  const auto& first = messages.at(0).at("content");
  std::string text, image;
  if (first.is_array()) {
    for (const auto& part : first) {
      if (part.at("type") == "text") text = part.at("text").get<std::string>();
      if (part.at("type") == "image_url") {
        const auto url = part.at("image_url").at("url").get<std::string>();
        image = image_name(url.substr(url.find(',') + 1));
      }
    }
  } else {
    text = first.get<std::string>();
  }

  if (!image.empty() && text.find("Counterfactual Keywords") != std::string::npos) {
    const auto& kw = script_.at("keywords");
    if (!kw.contains(image)) throw BackendError("synthetic backend: no keywords for " + image);
    return chat_reply(kw.at(image).get<std::string>());
  }

  if (!image.empty()) {
    const bool inception = text.starts_with("Please use counterfactual keywords");
    std::string question = text;
    if (inception) {
      const auto q = text.rfind("Question: ");
      question = text.substr(q + 10);
    }
    for (const auto& a : script_.at("answers")) {
      if (a.at("image") == image && a.at("question") == question) {
        return chat_reply(a.at(inception ? "inception" : "baseline").get<std::string>());
      }
    }
    throw BackendError("synthetic backend: no answer for " + image + " / " + question);
  }

  // Judge prompt: pull the candidate answer out of either template.
  std::string candidate = between(text, "[Assistant 2]\n", "\n\n[End of Assistant 2]");
  if (candidate.empty()) candidate = between(text, "LMM Response to Evaluate: ", "\n\nRate the response");
  const bool reask = messages.size() > 1;
  for (const auto& j : script_.at("judge")) {
    const auto question = j.at("question").get<std::string>();
    if (j.at("answer") == candidate && text.find(question) != std::string::npos) {
      if (!reask && j.contains("first_reply")) return chat_reply(j.at("first_reply").get<std::string>());
      return chat_reply(j.at("reply").get<std::string>());
    }
  }
  throw BackendError("synthetic backend: no judge reply for candidate '" + candidate + "'");
}

json Backend::clip(const json& body) const {
  const auto image = image_name(body.at("image").get<std::string>());
  const auto text = body.at("texts").at(0).get<std::string>();
  return {{"score", visual_score(iteration_of(image, text), image, text)}, {"model_id", "synthetic"}};
}

json Backend::nli(const json& body) const {
  const auto& pair = body.at("pairs").at(0);
  const auto premise = pair.at("premise").get<std::string>();
  const auto hypothesis = pair.at("hypothesis").get<std::string>();
  const double c = contradiction(iteration_of("", hypothesis), premise, hypothesis);
  const double e = round6((1.0 - c) * 0.25);
  return {{"entailment", e}, {"neutral", round6(1.0 - c - e)}, {"contradiction", c},
          {"model_id", "synthetic"}};
}

void Recorder::put(const std::string& fingerprint, gateway::BackendKind kind, const json& response) {
  std::lock_guard lock(mu_);
  entries_[kind].emplace(fingerprint, response);
}

std::string Recorder::fixture_text(gateway::BackendKind kind) const {
  std::lock_guard lock(mu_);
  std::string out;
  const auto it = entries_.find(kind);
  if (it == entries_.end()) return out;
  for (const auto& [fp, resp] : it->second) {
    out += json{{"fingerprint", fp}, {"response", resp}}.dump() + "\n";
  }
  return out;
}

json RecordingTransport::send(const gateway::WireRequest& request) {
  auto response = backend_->respond(request);
  recorder_->put(request.fingerprint, request.kind, response);
  return response;
}

}  // namespace cfinc::synthetic
