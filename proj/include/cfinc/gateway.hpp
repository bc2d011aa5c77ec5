#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace cfinc::store {
class LineWriter;
}

namespace cfinc::gateway {

// ---------------------------------------------------------------------------
// Request / response values
// ---------------------------------------------------------------------------

enum class Role { system, user, assistant };
std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::user;
  std::string text;
  // Path of an image attached to this message.
  std::optional<std::string> image_ref;
};

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 512;
  std::optional<std::int64_t> seed;

  // At least one user message, at most one image, finite temperature in [0, 2],
  // positive max_tokens. Throws InvalidRequest.
  void validate() const;
};

struct TokenCounts {
  std::int64_t input = 0;
  std::int64_t output = 0;
};

struct ChatResponse {
  std::string text;
  std::string backend_id;
  TokenCounts tokens;
  bool cached = false;
};

// Entailment / neutral / contradiction probabilities. Always sums to one.
class NliScores {
 public:
  // Accepts a backend triple. A drift of the sum from one up to 1e-4 is
  // renormalized away; anything larger, negative or non-finite components
  // throw MalformedScores.
  static NliScores from_backend(double entailment, double neutral, double contradiction);

  double entailment() const { return entailment_; }
  double neutral() const { return neutral_; }
  double contradiction() const { return contradiction_; }

  nlohmann::json to_json() const;
  static NliScores from_json(const nlohmann::json& j);

  friend bool operator==(const NliScores&, const NliScores&) = default;

 private:
  NliScores(double e, double n, double c) : entailment_(e), neutral_(n), contradiction_(c) {}
  double entailment_;
  double neutral_;
  double contradiction_;
};

// ---------------------------------------------------------------------------
// Backend configuration
// ---------------------------------------------------------------------------

enum class BackendKind { chat, visual_scorer, nli_scorer };
enum class BackendMode { live, mock };

std::string_view to_string(BackendKind kind);
std::string_view to_string(BackendMode mode);
BackendKind parse_backend_kind(std::string_view s);
BackendMode parse_backend_mode(std::string_view s);

struct BackendConfig {
  BackendKind kind = BackendKind::chat;
  BackendMode mode = BackendMode::live;
  // Chat: full chat-completions URL. Scorers: service base URL; the gateway
  // appends /clip_score or /nli.
  std::string endpoint_url;
  // Name of the environment variable holding the bearer token. Empty means
  // the endpoint needs no auth.
  std::string auth_env_var;
  std::string fixture_path;
  // Scorer model tag folded into request fingerprints. Chat models are named
  // per request instead.
  std::string model_id;
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  bool supports_seed = true;

  // live needs an endpoint; mock needs an existing fixture file. Throws ConfigError.
  void validate() const;

  nlohmann::json to_json() const;
  static BackendConfig from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------
// Images and fingerprints
// ---------------------------------------------------------------------------

struct ImageData {
  std::string path;
  std::string bytes;
  std::string sha256;
  std::string mime;
};

// MIME type sniffed from magic bytes, or empty when the format is unknown.
std::string detect_image_mime(std::string_view bytes);

// Reads and sniffs an image. Throws ImageError if unreadable or not an image.
ImageData load_image(const std::string& path);

using ImageHasher = std::function<std::string(const std::string& image_ref)>;

// Canonical forms hashed into fingerprints. Object keys are sorted, images are
// represented by the SHA-256 of their bytes.
nlohmann::json canonical_chat(const ChatRequest& req, const ImageHasher& image_sha256);
nlohmann::json canonical_clip(std::string_view image_sha256, std::string_view text,
                              std::string_view model_id);
nlohmann::json canonical_nli(std::string_view premise, std::string_view hypothesis,
                             std::string_view model_id);

// SHA-256 over the canonical serialization.
std::string fingerprint_of(const nlohmann::json& canonical);
std::string request_fingerprint(const ChatRequest& req);
std::string clip_fingerprint(const std::string& image_ref, std::string_view text,
                             std::string_view model_id = {});
std::string nli_fingerprint(std::string_view premise, std::string_view hypothesis,
                            std::string_view model_id = {});

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

// What a transport receives. `body` builds the wire payload on demand so that
// mock and cached paths never base64-encode images.
struct WireRequest {
  BackendKind kind = BackendKind::chat;
  std::string fingerprint;
  std::string path;
  std::function<nlohmann::json()> body;
};

// Transports return normalized responses:
//   chat:  {"text", "backend_id", "input_tokens", "output_tokens"}
//   clip:  {"score", "model_id"} or {"image_embedding": [...], "text_embedding": [...]}
//   nli:   {"entailment", "neutral", "contradiction", "model_id"}
class Transport {
 public:
  virtual ~Transport() = default;
  virtual nlohmann::json send(const WireRequest& request) = 0;
};

// Replays {fingerprint, response} JSONL records. Never touches the network.
class FixtureTransport : public Transport {
 public:
  explicit FixtureTransport(const std::filesystem::path& fixture_path);
  nlohmann::json send(const WireRequest& request) override;
  std::size_t size() const { return responses_.size(); }

 private:
  std::unordered_map<std::string, nlohmann::json> responses_;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// chat-completions over HTTP(S) for chat, scorer-service contract for the
// scorers. Does not retry; the gateway does.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(BackendConfig config, EnvLookup env = process_env());
  nlohmann::json send(const WireRequest& request) override;

 private:
  BackendConfig config_;
  EnvLookup env_;
};

std::shared_ptr<Transport> make_transport(const BackendConfig& config,
                                          EnvLookup env = process_env());

// Decorator counting calls and tracking how many are in flight at once.
class CountingTransport : public Transport {
 public:
  explicit CountingTransport(std::shared_ptr<Transport> inner) : inner_(std::move(inner)) {}
  nlohmann::json send(const WireRequest& request) override;
  std::size_t calls() const { return calls_.load(); }
  int peak_in_flight() const { return peak_.load(); }
  void reset() {
    calls_ = 0;
    peak_ = 0;
  }

 private:
  std::shared_ptr<Transport> inner_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
};

// Live reply decoding, exposed for tests.
nlohmann::json normalize_chat_completion(const nlohmann::json& reply);
nlohmann::json normalize_clip_reply(const nlohmann::json& reply);
nlohmann::json normalize_nli_reply(const nlohmann::json& reply);

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

// Content-addressed response cache. Concurrent lookups of the same
// fingerprint coalesce into one computation. Optionally persisted as
// append-only {fingerprint, response} JSONL, the same format fixtures use.
class ResponseCache {
 public:
  explicit ResponseCache(std::optional<std::filesystem::path> persist_path = std::nullopt);
  ~ResponseCache();

  struct Lookup {
    nlohmann::json response;
    bool hit = false;
  };

  // A failed computation is not cached.
  Lookup get_or_compute(const std::string& fingerprint,
                        const std::function<nlohmann::json()>& compute);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_future<nlohmann::json>> entries_;
  std::mutex write_mu_;
  std::unique_ptr<store::LineWriter> writer_;
};

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

struct Channel {
  std::shared_ptr<Transport> transport;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  bool supports_seed = true;
  std::string model_id;

  static Channel from_config(const BackendConfig& config, EnvLookup env = process_env());
};

struct Channels {
  Channel chat;
  std::optional<Channel> judge;  // falls back to chat
  Channel clip;
  Channel nli;
};

enum class ChatRoute { subject, judge };

struct GatewayOptions {
  // Upper bound on concurrent transport calls.
  int max_in_flight = 4;
  std::optional<std::filesystem::path> cache_path;
  std::function<void(std::chrono::milliseconds)> sleep;
};

struct GatewayStats {
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
  int peak_in_flight = 0;
};

class Gateway {
 public:
  Gateway(Channels channels, GatewayOptions options = {});

  ChatResponse chat(const ChatRequest& request, ChatRoute route = ChatRoute::subject);

  // Cosine similarity between the image and text embeddings, in [-1, 1].
  double clip_score(const std::string& image_ref, const std::string& text);

  NliScores nli(const std::string& premise, const std::string& hypothesis);

  GatewayStats stats() const;
  std::shared_ptr<const ImageData> image(const std::string& image_ref);

 private:
  nlohmann::json invoke(const Channel& channel, const WireRequest& request);
  nlohmann::json cached_invoke(const Channel& channel, const WireRequest& request,
                               const std::function<void(const nlohmann::json&)>& validate,
                               bool& hit);

  Channels channels_;
  GatewayOptions options_;
  ResponseCache cache_;
  std::counting_semaphore<1 << 20> in_flight_slots_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_in_flight_{0};
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> retries_{0};

  std::mutex images_mu_;
  std::map<std::string, std::shared_ptr<const ImageData>> images_;
};

// Interprets a normalized clip response. Throws ScoreOutOfRange.
double clip_value(const nlohmann::json& response);

}  // namespace cfinc::gateway
