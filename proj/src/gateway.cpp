#include "cfinc/gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "cfinc/error.hpp"
#include "cfinc/store.hpp"
#include "cfinc/util.hpp"

namespace cfinc::gateway {
namespace fs = std::filesystem;
using nlohmann::json;

// --- enums ---------------------------------------------------------------------

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::chat: return "chat";
    case BackendKind::visual_scorer: return "visual_scorer";
    case BackendKind::nli_scorer: return "nli_scorer";
  }
  return "chat";
}

std::string_view to_string(BackendMode mode) {
  return mode == BackendMode::live ? "live" : "mock";
}

BackendKind parse_backend_kind(std::string_view s) {
  if (s == "chat") return BackendKind::chat;
  if (s == "visual_scorer") return BackendKind::visual_scorer;
  if (s == "nli_scorer") return BackendKind::nli_scorer;
  throw ConfigError("unknown backend kind '" + std::string(s) + "'");
}

BackendMode parse_backend_mode(std::string_view s) {
  if (s == "live") return BackendMode::live;
  if (s == "mock") return BackendMode::mock;
  throw ConfigError("unknown backend mode '" + std::string(s) + "' (expected live or mock)");
}

// --- ChatRequest -----------------------------------------------------------------

void ChatRequest::validate() const {
  if (model_id.empty()) throw InvalidRequest("chat request has no model_id");
  bool has_user = false;
  int images = 0;
  for (const auto& m : messages) {
    has_user |= m.role == Role::user;
    if (m.image_ref) ++images;
  }
  if (!has_user) throw InvalidRequest("chat request needs at least one user message");
  if (images > 1) throw InvalidRequest("chat request carries more than one image");
  if (!std::isfinite(temperature) || temperature < 0.0 || temperature > 2.0) {
    throw InvalidRequest("temperature must be finite and within [0, 2]");
  }
  if (max_tokens <= 0) throw InvalidRequest("max_tokens must be positive");
}

// --- NliScores -------------------------------------------------------------------

NliScores NliScores::from_backend(double e, double n, double c) {
  for (double v : {e, n, c}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw MalformedScores("NLI component is negative or not finite");
    }
  }
  const double sum = e + n + c;
  if (std::abs(sum - 1.0) > 1e-4) {
    throw MalformedScores("NLI triple sums to " + std::to_string(sum) + ", expected 1");
  }
  return NliScores(e / sum, n / sum, c / sum);
}

json NliScores::to_json() const {
  return {{"entailment", entailment_}, {"neutral", neutral_}, {"contradiction", contradiction_}};
}

NliScores NliScores::from_json(const json& j) {
  try {
    return from_backend(j.at("entailment").get<double>(), j.at("neutral").get<double>(),
                        j.at("contradiction").get<double>());
  } catch (const json::exception& ex) {
    throw MalformedScores(std::string("NLI scores: ") + ex.what());
  }
}

// --- BackendConfig ---------------------------------------------------------------

void BackendConfig::validate() const {
  if (mode == BackendMode::live) {
    if (endpoint_url.empty()) {
      throw ConfigError(std::string(to_string(kind)) + " backend: live mode requires endpoint_url");
    }
  } else {
    std::error_code ec;
    if (fixture_path.empty() || !fs::is_regular_file(fixture_path, ec)) {
      throw ConfigError(std::string(to_string(kind)) +
                        " backend: mock fixture not found: '" + fixture_path + "'");
    }
  }
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
}

json BackendConfig::to_json() const {
  return {{"kind", to_string(kind)},
          {"mode", to_string(mode)},
          {"endpoint_url", endpoint_url},
          {"auth_env_var", auth_env_var},
          {"fixture_path", fixture_path},
          {"model_id", model_id},
          {"timeout_ms", timeout.count()},
          {"max_retries", max_retries},
          {"initial_backoff_ms", initial_backoff.count()},
          {"supports_seed", supports_seed}};
}

BackendConfig BackendConfig::from_json(const json& j) {
  BackendConfig c;
  c.kind = parse_backend_kind(j.value("kind", "chat"));
  c.mode = parse_backend_mode(j.value("mode", "live"));
  c.endpoint_url = j.value("endpoint_url", "");
  c.auth_env_var = j.value("auth_env_var", "");
  c.fixture_path = j.value("fixture_path", "");
  c.model_id = j.value("model_id", "");
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60'000));
  c.max_retries = j.value("max_retries", 3);
  c.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", 500));
  c.supports_seed = j.value("supports_seed", true);
  return c;
}

// --- images ----------------------------------------------------------------------

std::string detect_image_mime(std::string_view b) {
  auto starts = [&](std::string_view magic) { return b.substr(0, magic.size()) == magic; };
  if (starts("\x89PNG\r\n\x1a\n")) return "image/png";
  if (starts("\xff\xd8\xff")) return "image/jpeg";
  if (starts("GIF87a") || starts("GIF89a")) return "image/gif";
  if (b.size() >= 12 && starts("RIFF") && b.substr(8, 4) == "WEBP") return "image/webp";
  if (starts("BM") && b.size() > 26) return "image/bmp";
  if (b.size() > 2 && (starts("P6") || starts("P3")) &&
      std::isspace(static_cast<unsigned char>(b[2]))) {
    return "image/x-portable-pixmap";
  }
  return {};
}

ImageData load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot read image '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  ImageData img;
  img.path = path;
  img.bytes = ss.str();
  img.mime = detect_image_mime(img.bytes);
  if (img.mime.empty()) throw ImageError("'" + path + "' is not a recognized image");
  img.sha256 = util::sha256_hex(img.bytes);
  return img;
}

// --- fingerprints ----------------------------------------------------------------

json canonical_chat(const ChatRequest& req, const ImageHasher& image_sha256) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    json jm = {{"role", to_string(m.role)}, {"text", m.text}};
    if (m.image_ref) jm["image_sha256"] = image_sha256(*m.image_ref);
    messages.push_back(std::move(jm));
  }
  return {{"kind", "chat"},
          {"model", req.model_id},
          {"messages", std::move(messages)},
          {"temperature", req.temperature},
          {"max_tokens", req.max_tokens},
          {"seed", req.seed ? json(*req.seed) : json(nullptr)}};
}

json canonical_clip(std::string_view image_sha256, std::string_view text,
                    std::string_view model_id) {
  return {{"kind", "clip_score"}, {"image_sha256", image_sha256}, {"text", text},
          {"model", model_id}};
}

json canonical_nli(std::string_view premise, std::string_view hypothesis,
                   std::string_view model_id) {
  return {{"kind", "nli"}, {"premise", premise}, {"hypothesis", hypothesis},
          {"model", model_id}};
}

std::string fingerprint_of(const json& canonical) {
  return util::sha256_hex(canonical.dump());
}

std::string request_fingerprint(const ChatRequest& req) {
  return fingerprint_of(
      canonical_chat(req, [](const std::string& ref) { return load_image(ref).sha256; }));
}

std::string clip_fingerprint(const std::string& image_ref, std::string_view text,
                             std::string_view model_id) {
  return fingerprint_of(canonical_clip(load_image(image_ref).sha256, text, model_id));
}

std::string nli_fingerprint(std::string_view premise, std::string_view hypothesis,
                            std::string_view model_id) {
  return fingerprint_of(canonical_nli(premise, hypothesis, model_id));
}

// --- transports ------------------------------------------------------------------

FixtureTransport::FixtureTransport(const fs::path& fixture_path) {
  std::error_code ec;
  if (!fs::is_regular_file(fixture_path, ec)) {
    throw ConfigError("fixture file not found: " + fixture_path.string());
  }
  const auto lines = store::read_lines(fixture_path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (util::trim(lines[i]).empty()) continue;
    try {
      const auto j = json::parse(lines[i]);
      responses_.insert_or_assign(j.at("fingerprint").get<std::string>(), j.at("response"));
    } catch (const json::exception& ex) {
      throw CorruptRecord(i + 1, std::string("fixture ") + fixture_path.string() + ": " + ex.what());
    }
  }
}

json FixtureTransport::send(const WireRequest& request) {
  const auto it = responses_.find(request.fingerprint);
  if (it == responses_.end()) throw FixtureMiss(request.fingerprint);
  return it->second;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

std::shared_ptr<Transport> make_transport(const BackendConfig& config, EnvLookup env) {
  config.validate();
  if (config.mode == BackendMode::mock) {
    return std::make_shared<FixtureTransport>(config.fixture_path);
  }
  return std::make_shared<HttpTransport>(config, std::move(env));
}

json CountingTransport::send(const WireRequest& request) {
  ++calls_;
  const int now = ++in_flight_;
  int prev = peak_.load();
  while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
  }
  struct Leave {
    std::atomic<int>& n;
    ~Leave() { --n; }
  } leave{in_flight_};
  return inner_->send(request);
}

// --- cache -----------------------------------------------------------------------

ResponseCache::ResponseCache(std::optional<fs::path> persist_path) {
  if (!persist_path) return;
  std::error_code ec;
  if (fs::exists(*persist_path, ec)) {
    store::recover_torn_tail(*persist_path);
    const auto lines = store::read_lines(*persist_path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      try {
        const auto j = json::parse(lines[i]);
        std::promise<json> p;
        p.set_value(j.at("response"));
        entries_.insert_or_assign(j.at("fingerprint").get<std::string>(),
                                  p.get_future().share());
      } catch (const json::exception& ex) {
        throw CorruptRecord(i + 1, "cache " + persist_path->string() + ": " + ex.what());
      }
    }
  }
  writer_ = std::make_unique<store::LineWriter>(*persist_path, store::Sync::none);
}

ResponseCache::~ResponseCache() = default;

ResponseCache::Lookup ResponseCache::get_or_compute(const std::string& fingerprint,
                                                    const std::function<json()>& compute) {
  std::promise<json> promise;
  {
    std::unique_lock lock(mu_);
    const auto it = entries_.find(fingerprint);
    if (it != entries_.end()) {
      auto fut = it->second;
      lock.unlock();
      return {fut.get(), true};
    }
    entries_.emplace(fingerprint, promise.get_future().share());
  }
  json response;
  try {
    response = compute();
  } catch (...) {
    {
      std::lock_guard lock(mu_);
      entries_.erase(fingerprint);
    }
    promise.set_exception(std::current_exception());
    throw;
  }
  if (writer_) {
    std::lock_guard lock(write_mu_);
    writer_->append_line(json{{"fingerprint", fingerprint}, {"response", response}}.dump());
  }
  promise.set_value(response);
  return {std::move(response), false};
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// --- gateway ---------------------------------------------------------------------

Channel Channel::from_config(const BackendConfig& config, EnvLookup env) {
  Channel c;
  c.transport = make_transport(config, std::move(env));
  c.max_retries = config.max_retries;
  c.initial_backoff = config.initial_backoff;
  c.supports_seed = config.supports_seed;
  c.model_id = config.model_id;
  return c;
}

Gateway::Gateway(Channels channels, GatewayOptions options)
    : channels_(std::move(channels)),
      options_(std::move(options)),
      cache_(options_.cache_path),
      in_flight_slots_(std::max(1, options_.max_in_flight)) {
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

std::shared_ptr<const ImageData> Gateway::image(const std::string& image_ref) {
  {
    std::lock_guard lock(images_mu_);
    if (auto it = images_.find(image_ref); it != images_.end()) return it->second;
  }
  auto img = std::make_shared<const ImageData>(load_image(image_ref));
  std::lock_guard lock(images_mu_);
  return images_.try_emplace(image_ref, std::move(img)).first->second;
}

json Gateway::invoke(const Channel& channel, const WireRequest& request) {
  if (!channel.transport) {
    throw ConfigError(std::string(to_string(request.kind)) + " backend is not configured");
  }
  for (int attempt = 0;; ++attempt) {
    try {
      in_flight_slots_.acquire();
      struct Release {
        Gateway& g;
        ~Release() {
          --g.in_flight_;
          g.in_flight_slots_.release();
        }
      };
      const int now = ++in_flight_;
      Release release{*this};
      int prev = peak_in_flight_.load();
      while (now > prev && !peak_in_flight_.compare_exchange_weak(prev, now)) {
      }
      ++backend_calls_;
      return channel.transport->send(request);
    } catch (const TransportError&) {
      if (attempt >= channel.max_retries) throw;
      ++retries_;
      options_.sleep(channel.initial_backoff * (1LL << attempt));
    }
  }
}

json Gateway::cached_invoke(const Channel& channel, const WireRequest& request,
                            const std::function<void(const json&)>& validate, bool& hit) {
  auto lookup = cache_.get_or_compute(request.fingerprint, [&] {
    json response = invoke(channel, request);
    validate(response);
    return response;
  });
  hit = lookup.hit;
  if (hit) ++cache_hits_;
  return std::move(lookup.response);
}

ChatResponse Gateway::chat(const ChatRequest& request, ChatRoute route) {
  request.validate();
  const Channel& channel =
      route == ChatRoute::judge && channels_.judge ? *channels_.judge : channels_.chat;
  auto hasher = [this](const std::string& ref) { return image(ref)->sha256; };

  WireRequest wire;
  wire.kind = BackendKind::chat;
  wire.fingerprint = fingerprint_of(canonical_chat(request, hasher));
  wire.body = [this, &request, &channel] {
    json messages = json::array();
    for (const auto& m : request.messages) {
      json content;
      if (m.image_ref) {
        const auto img = image(*m.image_ref);
        content = json::array(
            {{{"type", "text"}, {"text", m.text}},
             {{"type", "image_url"},
              {"image_url",
               {{"url", "data:" + img->mime + ";base64," + util::base64_encode(img->bytes)}}}}});
      } else {
        content = m.text;
      }
      messages.push_back({{"role", to_string(m.role)}, {"content", std::move(content)}});
    }
    json body = {{"model", request.model_id},
                 {"messages", std::move(messages)},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens}};
    if (request.seed && channel.supports_seed) body["seed"] = *request.seed;
    return body;
  };

  bool hit = false;
  const json r = cached_invoke(channel, wire, [](const json& resp) {
    if (!resp.contains("text") || !resp["text"].is_string() ||
        resp["text"].get<std::string>().empty()) {
      throw BackendError("chat backend returned an empty reply");
    }
  }, hit);

  ChatResponse out;
  out.text = r.at("text").get<std::string>();
  out.backend_id = r.value("backend_id", "");
  out.tokens.input = std::max<std::int64_t>(0, r.value("input_tokens", 0));
  out.tokens.output = std::max<std::int64_t>(0, r.value("output_tokens", 0));
  out.cached = hit;
  return out;
}

double clip_value(const json& r) {
  double v = std::numeric_limits<double>::quiet_NaN();
  try {
    if (r.contains("score")) {
      v = r.at("score").get<double>();
    } else if (r.contains("image_embedding") && r.contains("text_embedding")) {
      const auto a = r.at("image_embedding").get<std::vector<double>>();
      const auto b = r.at("text_embedding").get<std::vector<double>>();
      v = util::cosine_similarity(a, b);
    }
  } catch (const std::exception& ex) {
    throw ScoreOutOfRange(std::string("unusable visual score reply: ") + ex.what());
  }
  if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
    throw ScoreOutOfRange("visual score outside [-1, 1] or not finite");
  }
  return v;
}

double Gateway::clip_score(const std::string& image_ref, const std::string& text) {
  if (util::trim(text).empty()) throw InvalidRequest("clip_score text is empty");
  const auto img = image(image_ref);
  WireRequest wire;
  wire.kind = BackendKind::visual_scorer;
  wire.path = "/clip_score";
  wire.fingerprint = fingerprint_of(canonical_clip(img->sha256, text, channels_.clip.model_id));
  wire.body = [img, &text] {
    return json{{"image", util::base64_encode(img->bytes)}, {"texts", json::array({text})}};
  };
  bool hit = false;
  const json r = cached_invoke(channels_.clip, wire, [](const json& resp) { clip_value(resp); }, hit);
  return clip_value(r);
}

NliScores Gateway::nli(const std::string& premise, const std::string& hypothesis) {
  if (util::trim(premise).empty() || util::trim(hypothesis).empty()) {
    throw InvalidRequest("nli premise and hypothesis must be non-empty");
  }
  WireRequest wire;
  wire.kind = BackendKind::nli_scorer;
  wire.path = "/nli";
  wire.fingerprint = fingerprint_of(canonical_nli(premise, hypothesis, channels_.nli.model_id));
  wire.body = [&premise, &hypothesis] {
    return json{{"pairs", json::array({{{"premise", premise}, {"hypothesis", hypothesis}}})}};
  };
  bool hit = false;
  const json r = cached_invoke(channels_.nli, wire,
                               [](const json& resp) { NliScores::from_json(resp); }, hit);
  return NliScores::from_json(r);
}

GatewayStats Gateway::stats() const {
  return {backend_calls_.load(), cache_hits_.load(), retries_.load(), peak_in_flight_.load()};
}

}  // namespace cfinc::gateway
