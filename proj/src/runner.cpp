#include "cfinc/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>

#include "cfinc/error.hpp"
#include "cfinc/inception.hpp"
#include "cfinc/store.hpp"
#include "cfinc/util.hpp"

namespace cfinc::runner {
using nlohmann::json;
namespace fs = std::filesystem;

// --- conditions ---------------------------------------------------------------------

std::string ConditionSpec::tag() const {
  switch (kind) {
    case ConditionKind::baseline: return "baseline";
    case ConditionKind::inception: return "inception";
    case ConditionKind::vv_only: return "vv_only";
    case ConditionKind::lv_only: return "lv_only";
    case ConditionKind::mixed_factual: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "mixed_factual_%g_s%llu", fraction,
                    static_cast<unsigned long long>(seed));
      return buf;
    }
  }
  return "unknown";
}

ConditionSpec ConditionSpec::parse(std::string_view text) {
  const auto t = util::to_lower(util::trim(text));
  if (t == "baseline") return {ConditionKind::baseline};
  if (t == "inception") return {ConditionKind::inception};
  if (t == "vv_only") return {ConditionKind::vv_only};
  if (t == "lv_only") return {ConditionKind::lv_only};
  constexpr std::string_view prefix = "mixed_factual";
  if (t.starts_with(prefix) && t.size() > prefix.size() &&
      (t[prefix.size()] == ':' || t[prefix.size()] == '_')) {
    // mixed_factual:<f>[:<seed>] or the tag form mixed_factual_<f>_s<seed>.
    std::string rest = t.substr(prefix.size() + 1);
    std::string frac = rest, seed;
    if (auto pos = rest.find(':'); pos != std::string::npos) {
      frac = rest.substr(0, pos);
      seed = rest.substr(pos + 1);
    } else if (auto s = rest.find("_s"); s != std::string::npos) {
      frac = rest.substr(0, s);
      seed = rest.substr(s + 2);
    }
    ConditionSpec c{ConditionKind::mixed_factual};
    try {
      std::size_t used = 0;
      c.fraction = std::stod(frac, &used);
      if (used != frac.size()) throw std::invalid_argument(frac);
      if (!seed.empty()) {
        c.seed = std::stoull(seed, &used);
        if (used != seed.size()) throw std::invalid_argument(seed);
      }
    } catch (const std::logic_error&) {
      throw ConfigError("malformed condition '" + std::string(text) + "'");
    }
    if (!(c.fraction >= 0.0 && c.fraction <= 1.0)) {
      throw ConfigError("mixed_factual fraction must lie in [0, 1]");
    }
    return c;
  }
  throw ConfigError("unknown condition '" + std::string(text) + "'");
}

dvp::DvpConfig dvp_config_for(const ConditionSpec& condition, const dvp::DvpConfig& base) {
  auto c = base;
  if (condition.kind == ConditionKind::vv_only) c.linguistic_enabled = false;
  if (condition.kind == ConditionKind::lv_only) c.visual_enabled = false;
  return c;
}

// --- config -------------------------------------------------------------------------

void RunConfig::validate() const {
  if (run_id.empty()) throw ConfigError("run_id is empty");
  if (run_dir.empty()) throw ConfigError("run_dir is empty");
  if (dataset_path.empty()) throw ConfigError("dataset path is empty");
  if (conditions.empty()) throw ConfigError("at least one condition is required");
  std::set<std::string> tags;
  bool keywords_needed = false;
  for (const auto& c : conditions) {
    if (!tags.insert(c.tag()).second) throw ConfigError("duplicate condition " + c.tag());
    keywords_needed = keywords_needed || c.needs_keywords();
  }
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (!(failure_cap >= 0.0 && failure_cap <= 1.0)) throw ConfigError("failure cap must lie in [0, 1]");
  if (subject_model.empty()) throw ConfigError("subject model is not set");
  if (max_tokens < 0) throw ConfigError("max_tokens must be >= 0");
  chat.validate();
  if (keywords_needed) {
    clip.validate();
    nli.validate();
    dvp.validate();
    if (keygen.n_iterations != dvp.n_iterations) {
      throw ConfigError("keyword iterations and DVP iterations disagree");
    }
  }
  if (!bench::is_discriminative(benchmark) && judge) judge->validate();
}

namespace {

json keygen_to_json(const keywords::GenerationOptions& o) {
  json j = {{"model_id", o.model_id},
            {"n_iterations", o.n_iterations},
            {"mode", o.mode == keywords::PromptMode::simple ? "simple" : "iterative"},
            {"temperature", o.temperature},
            {"max_tokens", o.max_tokens}};
  j["seed"] = o.seed ? json(*o.seed) : json(nullptr);
  return j;
}

keywords::GenerationOptions keygen_from_json(const json& j) {
  keywords::GenerationOptions o;
  o.model_id = j.value("model_id", "");
  o.n_iterations = j.value("n_iterations", 5);
  o.mode = j.value("mode", "iterative") == "simple" ? keywords::PromptMode::simple
                                                   : keywords::PromptMode::iterative;
  o.temperature = j.value("temperature", 0.8);
  o.max_tokens = j.value("max_tokens", 1024);
  if (j.contains("seed") && !j["seed"].is_null()) o.seed = j["seed"].get<std::int64_t>();
  return o;
}

}  // namespace

json RunConfig::to_json() const {
  json conds = json::array();
  for (const auto& c : conditions) conds.push_back(c.tag());
  json j = {{"run_id", run_id},
            {"run_dir", run_dir.string()},
            {"benchmark", bench::to_string(benchmark)},
            {"dataset_path", dataset_path.string()},
            {"allow_any_pope_split", load.allow_any_pope_split},
            {"chat", chat.to_json()},
            {"clip", clip.to_json()},
            {"nli", nli.to_json()},
            {"subject_model", subject_model},
            {"judge_model", judge_model},
            {"keygen", keygen_to_json(keygen)},
            {"dvp", dvp.to_json()},
            {"max_tokens", max_tokens},
            {"judge_max_tokens", judge_max_tokens},
            {"conditions", std::move(conds)},
            {"parallelism", parallelism},
            {"resume", resume},
            {"failure_cap", failure_cap},
            {"hallucination_cutoff", hallucination_cutoff},
            {"mmvp_mode", mmvp_mode == bench::MmvpMode::per_pair ? "per_pair" : "per_question"}};
  j["judge"] = judge ? judge->to_json() : json(nullptr);
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.run_id = j.at("run_id").get<std::string>();
  c.run_dir = j.value("run_dir", "");
  c.benchmark = bench::parse_benchmark_kind(j.at("benchmark").get<std::string>());
  c.dataset_path = j.at("dataset_path").get<std::string>();
  c.load.allow_any_pope_split = j.value("allow_any_pope_split", false);
  c.chat = gateway::BackendConfig::from_json(j.at("chat"));
  c.clip = gateway::BackendConfig::from_json(j.at("clip"));
  c.nli = gateway::BackendConfig::from_json(j.at("nli"));
  if (j.contains("judge") && !j["judge"].is_null()) {
    c.judge = gateway::BackendConfig::from_json(j["judge"]);
  }
  c.subject_model = j.value("subject_model", "");
  c.judge_model = j.value("judge_model", c.judge_model);
  if (j.contains("keygen")) c.keygen = keygen_from_json(j["keygen"]);
  if (j.contains("dvp")) c.dvp = dvp::DvpConfig::from_json(j["dvp"]);
  c.max_tokens = j.value("max_tokens", 0);
  c.judge_max_tokens = j.value("judge_max_tokens", 512);
  for (const auto& t : j.at("conditions")) c.conditions.push_back(ConditionSpec::parse(t.get<std::string>()));
  c.parallelism = j.value("parallelism", 4);
  c.resume = j.value("resume", true);
  c.failure_cap = j.value("failure_cap", 0.1);
  c.hallucination_cutoff = j.value("hallucination_cutoff", bench::kDefaultHallucinationCutoff);
  c.mmvp_mode = j.value("mmvp_mode", "per_question") == "per_pair" ? bench::MmvpMode::per_pair
                                                                  : bench::MmvpMode::per_question;
  return c;
}

// --- manifest -----------------------------------------------------------------------

json RunManifest::to_json() const {
  json fails = json::array();
  for (const auto& f : failures) {
    fails.push_back({{"sample_id", f.sample_id}, {"condition", f.condition}, {"stage", f.stage},
                     {"error", f.error}});
  }
  return {{"run_id", run_id},
          {"status", status},
          {"config", config},
          {"progress",
           {{"samples_total", samples_total},
            {"images_total", images_total},
            {"keywords", keywords_done},
            {"candidates", candidates_done},
            {"optimal", optimal_done},
            {"predictions", predictions_done},
            {"judgements", judgements_done},
            {"samples_failed", samples_failed}}},
          {"failures", std::move(fails)},
          {"backend",
           {{"gateway_calls", backend.backend_calls},
            {"cache_hits", backend.cache_hits},
            {"retries", backend.retries},
            {"peak_in_flight", backend.peak_in_flight},
            {"transport_calls", transport_calls}}},
          {"timings_ms",
           {{"keywords", keyword_ms},
            {"dvp", dvp_ms},
            {"inference", inference_ms},
            {"judge", judge_ms},
            {"total", total_ms}}},
          {"report_digest", report_digest}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.status = j.at("status").get<std::string>();
  m.config = j.at("config");
  const auto& p = j.at("progress");
  m.samples_total = p.value("samples_total", std::size_t{0});
  m.images_total = p.value("images_total", std::size_t{0});
  m.keywords_done = p.value("keywords", std::size_t{0});
  m.candidates_done = p.value("candidates", std::size_t{0});
  m.optimal_done = p.value("optimal", std::size_t{0});
  m.predictions_done = p.value("predictions", std::size_t{0});
  m.judgements_done = p.value("judgements", std::size_t{0});
  m.samples_failed = p.value("samples_failed", std::size_t{0});
  for (const auto& f : j.value("failures", json::array())) {
    m.failures.push_back({f.value("sample_id", ""), f.value("condition", ""), f.value("stage", ""),
                          f.value("error", "")});
  }
  const auto& b = j.at("backend");
  m.backend.backend_calls = b.value("gateway_calls", std::size_t{0});
  m.backend.cache_hits = b.value("cache_hits", std::size_t{0});
  m.backend.retries = b.value("retries", std::size_t{0});
  m.backend.peak_in_flight = b.value("peak_in_flight", 0);
  m.transport_calls = b.value("transport_calls", std::size_t{0});
  const auto& t = j.at("timings_ms");
  m.keyword_ms = t.value("keywords", 0.0);
  m.dvp_ms = t.value("dvp", 0.0);
  m.inference_ms = t.value("inference", 0.0);
  m.judge_ms = t.value("judge", 0.0);
  m.total_ms = t.value("total", 0.0);
  m.report_digest = j.value("report_digest", "");
  return m;
}

RunManifest load_manifest(const fs::path& run_dir) {
  const auto path = run_dir / kManifestFile;
  std::ifstream in(path);
  if (!in) throw IncompleteRun("no manifest in " + run_dir.string());
  try {
    return RunManifest::from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw IncompleteRun("unreadable manifest " + path.string() + ": " + e.what());
  }
}

namespace {

void write_manifest(const fs::path& run_dir, const RunManifest& m) {
  const auto path = run_dir / kManifestFile;
  const auto tmp = run_dir / (std::string(kManifestFile) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IOFailure("cannot write " + tmp.string());
    out << m.to_json().dump(2) << "\n";
    if (!out) throw IOFailure("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

std::string image_key(const fs::path& dataset_path, const std::string& image_ref) {
  const auto rel = fs::path(image_ref).lexically_relative(dataset_path.parent_path());
  if (rel.empty()) return fs::path(image_ref).generic_string();
  return rel.generic_string();
}

// --- execution ----------------------------------------------------------------------

namespace {

class UnconfiguredTransport : public gateway::Transport {
 public:
  explicit UnconfiguredTransport(std::string what) : what_(std::move(what)) {}
  json send(const gateway::WireRequest&) override {
    throw BackendError(what_ + " backend is not configured for this run");
  }

 private:
  std::string what_;
};

using Micros = std::atomic<long long>;

class StageTimer {
 public:
  explicit StageTimer(Micros& sink) : sink_(sink), t0_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    sink_ += std::chrono::duration_cast<std::chrono::microseconds>(
                 std::chrono::steady_clock::now() - t0_)
                 .count();
  }

 private:
  Micros& sink_;
  std::chrono::steady_clock::time_point t0_;
};

double to_ms(long long micros) { return static_cast<double>(micros) / 1000.0; }

struct Stores {
  explicit Stores(const fs::path& dir)
      : keywords(dir / kKeywordsFile),
        candidates(dir / kCandidatesFile),
        optimal(dir / kOptimalFile),
        predictions(dir / kPredictionsFile),
        judge(dir / kJudgeFile) {}
  store::RecordStore keywords, candidates, optimal, predictions, judge;
};

std::size_t count_run(const store::RecordStore& s, const std::string& run_id) {
  std::size_t n = 0;
  for (const auto& r : s.records()) n += r.run_id == run_id ? 1 : 0;
  return n;
}

bool any_keyword_condition(const RunConfig& c) {
  return std::any_of(c.conditions.begin(), c.conditions.end(),
                     [](const ConditionSpec& s) { return s.needs_keywords(); });
}

struct ImageWork {
  std::string key;
  std::string image_ref;
};

std::vector<ImageWork> unique_images(const RunConfig& config,
                                     const std::vector<bench::BenchmarkSample>& samples) {
  std::vector<ImageWork> out;
  std::set<std::string> seen;
  for (const auto& s : samples) {
    auto key = image_key(config.dataset_path, s.image_ref);
    if (seen.insert(key).second) out.push_back({std::move(key), s.image_ref});
  }
  return out;
}

dvp::OptimalKeywords optimal_for(const ConditionSpec& cond, const RunConfig& config,
                                 const keywords::KeywordRecord& kw,
                                 const dvp::ScoringResult& scored, const std::string& key,
                                 json& extra) {
  if (cond.kind != ConditionKind::mixed_factual) {
    return dvp::select_from_scored(scored.candidates, dvp_config_for(cond, config.dvp));
  }
  auto base = dvp::select_from_scored(scored.candidates, config.dvp);
  if (base.fallback_used) return base;
  const auto seed = cond.seed ^ util::fnv1a64(key);
  auto mixed = keywords::mix_keywords(kw.factual, base.keywords, cond.fraction, seed);
  dvp::OptimalKeywords out;
  out.keywords = mixed.keywords;
  out.fallback_used = out.keywords.empty();
  extra = {{"from_factual", mixed.from_factual}, {"seed", seed}, {"fraction", cond.fraction}};
  return out;
}

}  // namespace

RunManifest execute(const RunConfig& input, const RunHooks& hooks) {
  const auto t_start = std::chrono::steady_clock::now();
  RunConfig config = input;
  config.validate();
  config.dataset_path = fs::absolute(config.dataset_path).lexically_normal();

  std::error_code ec;
  if (!config.resume && fs::exists(config.run_dir / kManifestFile, ec)) {
    throw ConfigError("run directory " + config.run_dir.string() +
                      " already holds a run; resume it or choose another directory");
  }
  fs::create_directories(config.run_dir, ec);
  if (ec) throw IOFailure("cannot create " + config.run_dir.string() + ": " + ec.message());

  const auto samples = bench::load_benchmark(config.dataset_path, config.benchmark, config.load);
  const bool need_keywords = any_keyword_condition(config);
  const bool generative = !bench::is_discriminative(config.benchmark);
  const auto images = need_keywords ? unique_images(config, samples) : std::vector<ImageWork>{};

  RunManifest manifest;
  manifest.run_id = config.run_id;
  manifest.status = "running";
  manifest.config = config.to_json();
  manifest.samples_total = samples.size();
  manifest.images_total = images.size();
  write_manifest(config.run_dir, manifest);

  // Backends.
  const auto env = hooks.env ? hooks.env : gateway::process_env();
  std::vector<std::shared_ptr<gateway::CountingTransport>> counters;
  auto channel = [&](const gateway::BackendConfig& bc, bool needed, const char* what) {
    gateway::Channel c;
    c.max_retries = bc.max_retries;
    c.initial_backoff = bc.initial_backoff;
    c.supports_seed = bc.supports_seed;
    c.model_id = bc.model_id;
    std::shared_ptr<gateway::Transport> inner;
    if (!needed) {
      inner = std::make_shared<UnconfiguredTransport>(what);
    } else if (hooks.make_transport) {
      inner = hooks.make_transport(bc);
    } else {
      inner = gateway::make_transport(bc, env);
    }
    auto counting = std::make_shared<gateway::CountingTransport>(std::move(inner));
    counters.push_back(counting);
    c.transport = counting;
    return c;
  };
  gateway::Channels channels{channel(config.chat, true, "chat"), std::nullopt,
                             channel(config.clip, need_keywords, "visual scorer"),
                             channel(config.nli, need_keywords, "nli scorer")};
  if (generative && config.judge) channels.judge = channel(*config.judge, true, "judge");

  gateway::GatewayOptions gopts;
  gopts.max_in_flight = config.parallelism;
  gopts.cache_path = config.run_dir / kCacheFile;
  gopts.sleep = hooks.sleep;
  gateway::Gateway gw(std::move(channels), gopts);

  Stores stores(config.run_dir);
  const auto& run_id = config.run_id;

  std::mutex fail_mu;
  std::vector<FailureRecord> failures;
  std::map<std::string, std::string> image_failure;  // key -> "stage: error"
  auto fail = [&](FailureRecord f) {
    std::lock_guard lock(fail_mu);
    std::clog << "runner: " << f.sample_id << " [" << f.condition << "] " << f.stage << ": "
              << f.error << "\n";
    failures.push_back(std::move(f));
  };

  Micros keyword_us{0}, dvp_us{0}, infer_us{0}, judge_us{0};

  // Phase 1: per image keywords, candidate scoring and optimal sets.
  auto kwopts = config.keygen;
  if (kwopts.model_id.empty()) kwopts.model_id = config.subject_model;
  std::map<std::string, std::map<std::string, dvp::OptimalKeywords>> optimal_by_image;
  std::mutex optimal_mu;

  util::parallel_for(images.size(), config.parallelism, [&](std::size_t i) {
    const auto& img = images[i];
    std::string stage = "keywords";
    try {
      keywords::KeywordRecord kw;
      if (auto rec = stores.keywords.find("keywords", run_id, img.key)) {
        kw = keywords::KeywordRecord::from_json(rec->payload);
      } else {
        StageTimer t(keyword_us);
        kw = keywords::generate_keywords(gw, img.image_ref, kwopts);
        stores.keywords.append(
            store::RecordEnvelope::make("keywords", run_id, img.key, "", kw.to_json()));
      }

      stage = "candidates";
      dvp::ScoringResult scored;
      if (auto rec = stores.candidates.find("candidates", run_id, img.key)) {
        scored = dvp::ScoringResult::from_json(rec->payload);
      } else {
        StageTimer t(dvp_us);
        scored = dvp::score_candidates(gw, kw, img.image_ref, config.dvp, 1);
        stores.candidates.append(
            store::RecordEnvelope::make("candidates", run_id, img.key, "", scored.to_json()));
      }

      stage = "optimal";
      std::map<std::string, dvp::OptimalKeywords> per_condition;
      for (const auto& cond : config.conditions) {
        if (!cond.needs_keywords()) continue;
        const auto tag = cond.tag();
        if (auto rec = stores.optimal.find("optimal", run_id, img.key, tag)) {
          per_condition[tag] = dvp::OptimalKeywords::from_json(rec->payload.at("optimal"));
          continue;
        }
        json extra = json::object();
        auto opt = optimal_for(cond, config, kw, scored, img.key, extra);
        json payload = {{"optimal", opt.to_json()}, {"extra", extra}};
        stores.optimal.append(store::RecordEnvelope::make("optimal", run_id, img.key, tag, payload));
        per_condition[tag] = std::move(opt);
      }
      std::lock_guard lock(optimal_mu);
      optimal_by_image[img.key] = std::move(per_condition);
    } catch (const std::exception& e) {
      std::lock_guard lock(fail_mu);
      image_failure[img.key] = stage + ": " + e.what();
      std::clog << "runner: image " << img.key << " " << stage << ": " << e.what() << "\n";
    }
  });

  // Phase 2: inference and judging per sample.
  const std::size_t limit =
      hooks.stop_after_samples ? std::min(*hooks.stop_after_samples, samples.size()) : samples.size();
  inception::InferenceOptions iopts;
  iopts.model_id = config.subject_model;
  iopts.max_tokens = config.max_tokens > 0
                         ? config.max_tokens
                         : inception::default_max_tokens(bench::is_discriminative(config.benchmark));
  bench::JudgeOptions jopts{config.judge_model, config.judge_max_tokens};

  util::parallel_for(limit, config.parallelism, [&](std::size_t i) {
    const auto& sample = samples[i];
    const auto key = image_key(config.dataset_path, sample.image_ref);
    for (const auto& cond : config.conditions) {
      const auto tag = cond.tag();
      std::string stage = "inference";
      try {
        bench::PredictionRecord pred;
        if (auto rec = stores.predictions.find("prediction", run_id, sample.sample_id, tag)) {
          pred = bench::PredictionRecord::from_json(rec->payload);
        } else {
          dvp::OptimalKeywords opt;
          if (cond.needs_keywords()) {
            std::unique_lock lock(optimal_mu);
            const auto img = optimal_by_image.find(key);
            if (img == optimal_by_image.end() || !img->second.contains(tag)) {
              lock.unlock();
              std::lock_guard flock(fail_mu);
              const auto why = image_failure.find(key);
              throw Error("no verified keywords for image " + key +
                          (why == image_failure.end() ? "" : " (" + why->second + ")"));
            }
            opt = img->second.at(tag);
          }
          gateway::ChatResponse reply;
          {
            StageTimer t(infer_us);
            reply = cond.needs_keywords()
                        ? inception::infer(gw, sample.image_ref, sample.question, opt, iopts)
                        : inception::infer_baseline(gw, sample.image_ref, sample.question, iopts);
          }
          pred.sample_id = sample.sample_id;
          pred.condition = tag;
          pred.raw_answer = reply.text;
          pred.extracted = bench::extract_answer(sample, reply.text);
          pred.fallback_used = cond.needs_keywords() && (opt.fallback_used || opt.keywords.empty());
          if (cond.needs_keywords() && !pred.fallback_used) pred.keywords_used = opt.keywords;
          stores.predictions.append(store::RecordEnvelope::make("prediction", run_id,
                                                                sample.sample_id, tag,
                                                                pred.to_json()));
        }
        if (generative && !stores.judge.find("judge", run_id, sample.sample_id, tag)) {
          stage = "judge";
          StageTimer t(judge_us);
          const auto verdict = bench::judge_generative(gw, sample, pred.raw_answer, jopts);
          stores.judge.append(store::RecordEnvelope::make("judge", run_id, sample.sample_id, tag,
                                                          verdict.to_json()));
        }
      } catch (const std::exception& e) {
        fail({sample.sample_id, tag, stage, e.what()});
      }
    }
  });

  // Bookkeeping.
  std::sort(failures.begin(), failures.end(), [](const FailureRecord& a, const FailureRecord& b) {
    return std::tie(a.sample_id, a.condition) < std::tie(b.sample_id, b.condition);
  });
  std::set<std::string> failed_samples;
  for (const auto& f : failures) failed_samples.insert(f.sample_id);
  manifest.failures = failures;
  manifest.samples_failed = failed_samples.size();
  manifest.keywords_done = count_run(stores.keywords, run_id);
  manifest.candidates_done = count_run(stores.candidates, run_id);
  manifest.optimal_done = count_run(stores.optimal, run_id);
  manifest.predictions_done = count_run(stores.predictions, run_id);
  manifest.judgements_done = count_run(stores.judge, run_id);
  manifest.backend = gw.stats();
  for (const auto& c : counters) manifest.transport_calls += c->calls();
  manifest.keyword_ms = to_ms(keyword_us);
  manifest.dvp_ms = to_ms(dvp_us);
  manifest.inference_ms = to_ms(infer_us);
  manifest.judge_ms = to_ms(judge_us);

  const double failed_share =
      samples.empty() ? 0.0
                      : static_cast<double>(failed_samples.size()) / static_cast<double>(samples.size());
  if (limit < samples.size()) {
    manifest.status = "interrupted";
  } else if (failed_share > config.failure_cap) {
    manifest.status = "failed";
  } else {
    manifest.status = "completed";
  }
  write_manifest(config.run_dir, manifest);

  if (manifest.status != "interrupted") {
    manifest.report_digest = write_report(config.run_dir).digest;
  }
  manifest.total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                t_start)
                          .count();
  write_manifest(config.run_dir, manifest);
  return manifest;
}

// --- dry run ------------------------------------------------------------------------

json PlannedCalls::to_json() const {
  return {{"samples", samples},
          {"images", images},
          {"keyword_calls", keyword_calls},
          {"inference_calls", inference_calls},
          {"judge_calls", judge_calls},
          {"known_scorer_calls", known_scorer_calls},
          {"images_pending_scoring", images_pending_scoring}};
}

PlannedCalls plan(const RunConfig& input) {
  RunConfig config = input;
  config.validate();
  config.dataset_path = fs::absolute(config.dataset_path).lexically_normal();
  const auto samples = bench::load_benchmark(config.dataset_path, config.benchmark, config.load);

  auto existing = [&](std::string_view file, std::string_view kind) {
    std::set<std::pair<std::string, std::string>> keys;
    const auto path = config.run_dir / file;
    std::error_code ec;
    if (!config.resume || !fs::exists(path, ec)) return keys;
    for (const auto& r : store::read_all(path, kind)) {
      if (r.run_id == config.run_id) keys.emplace(r.sample_id, r.condition);
    }
    return keys;
  };
  const auto kw_done = existing(kKeywordsFile, "keywords");
  const auto cand_done = existing(kCandidatesFile, "candidates");
  const auto pred_done = existing(kPredictionsFile, "prediction");
  const auto judge_done = existing(kJudgeFile, "judge");

  std::map<std::string, std::size_t> kw_sizes;
  {
    const auto path = config.run_dir / kKeywordsFile;
    std::error_code ec;
    if (config.resume && fs::exists(path, ec)) {
      for (const auto& r : store::read_all(path, "keywords")) {
        if (r.run_id != config.run_id) continue;
        std::size_t n = 0;
        for (const auto& set : r.payload.at("counterfactual_sets")) n += set.size();
        kw_sizes[r.sample_id] = n;
      }
    }
  }

  PlannedCalls p;
  p.samples = samples.size();
  if (any_keyword_condition(config)) {
    const auto images = unique_images(config, samples);
    p.images = images.size();
    for (const auto& img : images) {
      if (!kw_done.contains({img.key, ""})) {
        ++p.keyword_calls;
        ++p.images_pending_scoring;
      } else if (!cand_done.contains({img.key, ""})) {
        p.known_scorer_calls += 2 * kw_sizes[img.key];
      }
    }
  }
  const bool generative = !bench::is_discriminative(config.benchmark);
  for (const auto& s : samples) {
    for (const auto& c : config.conditions) {
      if (!pred_done.contains({s.sample_id, c.tag()})) ++p.inference_calls;
      if (generative && !judge_done.contains({s.sample_id, c.tag()})) ++p.judge_calls;
    }
  }
  return p;
}

}  // namespace cfinc::runner
