#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfinc/bench.hpp"
#include "cfinc/dvp.hpp"
#include "cfinc/gateway.hpp"
#include "cfinc/keywordgen.hpp"
#include "json.hpp"

namespace cfinc::runner {

enum class ConditionKind { baseline, inception, vv_only, lv_only, mixed_factual };

struct ConditionSpec {
  ConditionKind kind = ConditionKind::baseline;
  double fraction = 0.0;    // mixed_factual only
  std::uint64_t seed = 0;   // mixed_factual only

  // "baseline", "inception", "vv_only", "lv_only", "mixed_factual_0.25_s7".
  std::string tag() const;
  bool needs_keywords() const { return kind != ConditionKind::baseline; }

  // Accepts the plain names and "mixed_factual:<fraction>[:<seed>]".
  static ConditionSpec parse(std::string_view text);
  friend bool operator==(const ConditionSpec&, const ConditionSpec&) = default;
};

// DVP settings a condition runs with: vv_only disables the linguistic filter,
// lv_only the visual one, everything else uses the base settings unchanged.
dvp::DvpConfig dvp_config_for(const ConditionSpec& condition, const dvp::DvpConfig& base);

struct RunConfig {
  std::string run_id = "run";
  std::filesystem::path run_dir;
  bench::BenchmarkKind benchmark = bench::BenchmarkKind::pope_adversarial;
  std::filesystem::path dataset_path;
  bench::LoadOptions load;

  gateway::BackendConfig chat;
  gateway::BackendConfig clip;
  gateway::BackendConfig nli;
  std::optional<gateway::BackendConfig> judge;  // defaults to the chat backend

  std::string subject_model;
  std::string judge_model = "gpt-4";
  keywords::GenerationOptions keygen;  // model_id empty means subject_model
  dvp::DvpConfig dvp;
  int max_tokens = 0;  // 0 picks 64 for discriminative kinds, 512 otherwise
  int judge_max_tokens = 512;

  std::vector<ConditionSpec> conditions;
  int parallelism = 4;
  bool resume = true;
  double failure_cap = 0.1;
  double hallucination_cutoff = bench::kDefaultHallucinationCutoff;
  bench::MmvpMode mmvp_mode = bench::MmvpMode::per_question;

  // Non-empty condition list without duplicates, parallelism >= 1, cap in
  // [0, 1], backend configs valid. Throws ConfigError.
  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

struct FailureRecord {
  std::string sample_id;
  std::string condition;
  std::string stage;
  std::string error;
};

struct RunManifest {
  std::string run_id;
  std::string status;  // completed | failed | interrupted
  nlohmann::json config;
  // Progress: records present at the end of the run (resumed ones included).
  std::size_t samples_total = 0;
  std::size_t images_total = 0;
  std::size_t keywords_done = 0;
  std::size_t candidates_done = 0;
  std::size_t optimal_done = 0;
  std::size_t predictions_done = 0;
  std::size_t judgements_done = 0;
  std::size_t samples_failed = 0;
  std::vector<FailureRecord> failures;
  gateway::GatewayStats backend;
  std::size_t transport_calls = 0;
  double keyword_ms = 0, dvp_ms = 0, inference_ms = 0, judge_ms = 0, total_ms = 0;
  std::string report_digest;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

// Test seams. Any unset member keeps the production behaviour.
struct RunHooks {
  // Builds the transport for a backend; wrapped in a counter by the runner.
  std::function<std::shared_ptr<gateway::Transport>(const gateway::BackendConfig&)> make_transport;
  gateway::EnvLookup env;
  std::function<void(std::chrono::milliseconds)> sleep;
  // Stops after this many samples of the inference phase, leaving an
  // interrupted run behind.
  std::optional<std::size_t> stop_after_samples;
};

// Run directory files.
inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kKeywordsFile = "keywords.jsonl";
inline constexpr std::string_view kCandidatesFile = "candidates.jsonl";
inline constexpr std::string_view kOptimalFile = "optimal.jsonl";
inline constexpr std::string_view kPredictionsFile = "predictions.jsonl";
inline constexpr std::string_view kJudgeFile = "judge.jsonl";
inline constexpr std::string_view kCacheFile = "cache.jsonl";
inline constexpr std::string_view kReportFile = "report.tsv";
inline constexpr std::string_view kSummaryFile = "summary.txt";

// Image key used for per-image records: the image path relative to the
// dataset directory, with forward slashes.
std::string image_key(const std::filesystem::path& dataset_path, const std::string& image_ref);

// Runs every sample through every condition, persisting each stage under
// run_dir, then writes the report. Per-sample failures are recorded; the run
// is marked failed when the failed share exceeds the cap. With resume set,
// existing records are reused and never recomputed.
RunManifest execute(const RunConfig& config, const RunHooks& hooks = {});

struct PlannedCalls {
  std::size_t samples = 0;
  std::size_t images = 0;
  std::size_t keyword_calls = 0;
  std::size_t inference_calls = 0;
  std::size_t judge_calls = 0;  // excluding format re-asks
  // Scorer calls are two per counterfactual keyword; only the counts for
  // images whose keywords already exist are known up front.
  std::size_t known_scorer_calls = 0;
  std::size_t images_pending_scoring = 0;

  nlohmann::json to_json() const;
};

// Dry run: what execute would send, given the records already on disk. No
// network access and nothing written.
PlannedCalls plan(const RunConfig& config);

struct Report {
  std::string tsv;
  std::string summary;
  std::string digest;  // sha256 of tsv
  std::vector<std::string> conditions;
  bool has_deltas = false;
};

// Builds the report from the records in run_dir for the conditions recorded
// in its manifest. Deterministic: depends only on record contents.
Report build_report(const std::filesystem::path& run_dir);

// Writes report.tsv and summary.txt; returns the report.
Report write_report(const std::filesystem::path& run_dir);

// Side-by-side comparison; requires a completed run with baseline and at
// least one other condition. Throws IncompleteRun.
Report compare_conditions(const std::filesystem::path& run_dir);

RunManifest load_manifest(const std::filesystem::path& run_dir);

}  // namespace cfinc::runner
