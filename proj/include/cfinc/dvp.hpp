#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cfinc/gateway.hpp"
#include "cfinc/keywordgen.hpp"
#include "json.hpp"

// Dual-modality verification: keeps counterfactual keywords whose image-text
// similarity sits inside a band (visual check) and whose NLI contradiction
// against the factual keywords clears a threshold (linguistic check).
namespace cfinc::dvp {

struct ScoredCandidate {
  std::string keyword;
  int iteration = 1;         // 1..N, which counterfactual set it came from
  std::size_t position = 0;  // index inside that set
  double visual_score = 0.0;
  gateway::NliScores nli = gateway::NliScores::from_backend(0.0, 1.0, 0.0);
  std::string premise_used;

  nlohmann::json to_json() const;
  static ScoredCandidate from_json(const nlohmann::json& j);
};

struct DroppedCandidate {
  std::string keyword;
  int iteration = 1;
  std::string reason;
};

enum class VisualMode { percentile, absolute };
enum class PremisePolicy { aligned_then_joined, joined_only };

struct DvpConfig {
  VisualMode visual_mode = VisualMode::percentile;
  double k_percent = 20.0;  // percentile mode: share trimmed from each tail
  double low = 0.2;         // absolute mode band, inclusive
  double high = 0.8;
  double tau = 0.9;
  int n_iterations = 5;
  PremisePolicy premise_policy = PremisePolicy::aligned_then_joined;
  bool dedupe = true;
  // Ablation switches; a disabled filter is the identity.
  bool visual_enabled = true;
  bool linguistic_enabled = true;
  // NLI hypothesis template; "{keyword}" is replaced. Empty sends the bare keyword.
  std::string hypothesis_template;

  // 0 < K < 50, low < high, tau in [0, 1], n_iterations >= 1. Throws ConfigError.
  void validate() const;

  // K = 20 %, tau = 0.9, N = 5.
  static DvpConfig percentile_profile();
  // Absolute band [0.2, 0.8], tau = 0.8.
  static DvpConfig band_profile();

  nlohmann::json to_json() const;
  static DvpConfig from_json(const nlohmann::json& j);
};

struct ScoringResult {
  std::vector<ScoredCandidate> candidates;
  std::vector<DroppedCandidate> dropped;

  nlohmann::json to_json() const;
  static ScoringResult from_json(const nlohmann::json& j);
};

struct OptimalKeywords {
  std::vector<std::string> keywords;
  std::vector<ScoredCandidate> provenance;
  bool fallback_used = false;

  nlohmann::json to_json() const;
  static OptimalKeywords from_json(const nlohmann::json& j);
};

// Premise for the candidate at `position`: the positionally aligned factual
// keyword when the policy allows and it exists, otherwise the factual list
// joined with ", ".
std::string premise_for(const keywords::KeywordRecord& record, std::size_t position,
                        PremisePolicy policy);

// Pools every counterfactual set (iteration tags kept) and scores each entry
// with the visual and NLI backends. A candidate whose scoring throws is dropped
// and reported, never zero-filled. Rethrows only when every candidate failed.
ScoringResult score_candidates(gateway::Gateway& gw, const keywords::KeywordRecord& record,
                               const std::string& image_ref, const DvpConfig& config,
                               int parallelism = 1);

// Number trimmed from each tail in percentile mode: floor(K * n / 100).
std::size_t trim_count(double k_percent, std::size_t n);

// Percentile mode drops the trim_count lowest and highest visual scores (ties
// broken by input order); absolute mode keeps low <= score <= high. The input
// order of survivors is preserved.
std::vector<ScoredCandidate> visual_filter(const std::vector<ScoredCandidate>& cands,
                                           const DvpConfig& config);

// Keeps contradiction >= tau, order preserved.
std::vector<ScoredCandidate> linguistic_filter(const std::vector<ScoredCandidate>& cands,
                                               const DvpConfig& config);

// Case-insensitive dedupe, first occurrence wins.
std::vector<ScoredCandidate> dedupe(const std::vector<ScoredCandidate>& cands);

// Filter stage only, for candidates scored earlier.
OptimalKeywords select_from_scored(const std::vector<ScoredCandidate>& cands,
                                   const DvpConfig& config);

OptimalKeywords select_optimal(gateway::Gateway& gw, const keywords::KeywordRecord& record,
                               const std::string& image_ref, const DvpConfig& config,
                               int parallelism = 1);

struct TrendRow {
  int iteration = 0;
  double mean_visual = 0.0;
  double mean_contradiction = 0.0;
  std::size_t count = 0;
};

// Per-iteration means in ascending iteration order; empty iterations omitted.
std::vector<TrendRow> iteration_trend(const std::vector<ScoredCandidate>& cands);

}  // namespace cfinc::dvp
