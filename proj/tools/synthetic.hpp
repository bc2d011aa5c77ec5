#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "cfinc/gateway.hpp"
#include "json.hpp"

namespace cfinc::synthetic {

// Scripted stand-in for the three backends, used to record the bundled
// fixtures. Chat replies come from script.json; scorer values are a fixed
// function of the keyword's iteration plus a hash jitter, so later
// iterations look more similar to the image and contradict the facts less.
class Backend {
 public:
  Backend(const std::filesystem::path& script_path, const std::filesystem::path& image_dir);

  nlohmann::json respond(const gateway::WireRequest& request) const;

  // Scorer rules, exposed for tests.
  static double visual_score(int iteration, std::string_view image, std::string_view text);
  static double contradiction(int iteration, std::string_view premise, std::string_view hypothesis);

 private:
  nlohmann::json chat(const nlohmann::json& body) const;
  nlohmann::json clip(const nlohmann::json& body) const;
  nlohmann::json nli(const nlohmann::json& body) const;
  std::string image_name(const std::string& base64) const;
  int iteration_of(const std::string& image, const std::string& keyword) const;

  nlohmann::json script_;
  std::map<std::string, std::string> image_by_b64_;
  // image -> keyword (lowercase) -> iteration
  std::map<std::string, std::map<std::string, int>> iterations_;
};

// Records every response under its fingerprint.
class Recorder {
 public:
  void put(const std::string& fingerprint, gateway::BackendKind kind, const nlohmann::json& response);
  // Fixture JSONL text for one backend kind, sorted by fingerprint.
  std::string fixture_text(gateway::BackendKind kind) const;

 private:
  mutable std::mutex mu_;
  std::map<gateway::BackendKind, std::map<std::string, nlohmann::json>> entries_;
};

class RecordingTransport : public gateway::Transport {
 public:
  RecordingTransport(std::shared_ptr<const Backend> backend, std::shared_ptr<Recorder> recorder)
      : backend_(std::move(backend)), recorder_(std::move(recorder)) {}
  nlohmann::json send(const gateway::WireRequest& request) override;

 private:
  std::shared_ptr<const Backend> backend_;
  std::shared_ptr<Recorder> recorder_;
};

}  // namespace cfinc::synthetic
