#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cfinc/gateway.hpp"
#include "cfinc/keywordgen.hpp"
#include "json.hpp"

namespace cfinc::bench {

enum class BenchmarkKind { pope_adversarial, mmvp, llava_wild, mmhal };

std::string_view to_string(BenchmarkKind kind);
// Accepts the canonical names plus the short aliases pope, llava.
BenchmarkKind parse_benchmark_kind(std::string_view s);
bool is_discriminative(BenchmarkKind kind);

inline constexpr std::array<std::string_view, 9> kMmvpPatterns = {
    "Orientation and Direction",
    "Presence of Specific Features",
    "State and Condition",
    "Quantity and Count",
    "Positional and Relational Context",
    "Color and Appearance",
    "Structural and Physical Characteristics",
    "Text",
    "Viewpoint and Perspective",
};

inline constexpr std::array<std::string_view, 3> kLlavaCategories = {"conversation", "detail",
                                                                     "reasoning"};

// --- samples ----------------------------------------------------------------------

struct OptionChoice {
  std::string label;  // "a", "b", ...
  std::string text;
};

struct YesNoGold {
  bool yes = false;
};
struct OptionGold {
  std::string label;
  std::vector<OptionChoice> choices;
};
struct ReferenceGold {
  std::string text;
};
struct ReferenceWithCategory {
  std::string text;
  std::string category;  // image content category names shown to the judge
};
using Gold = std::variant<YesNoGold, OptionGold, ReferenceGold, ReferenceWithCategory>;

struct BenchmarkSample {
  std::string sample_id;
  BenchmarkKind benchmark = BenchmarkKind::pope_adversarial;
  std::string image_ref;
  std::string question;
  Gold gold;
  // mmvp: "pattern", "pair_id"; llava: "category"; mmhal: "category" (question type).
  std::map<std::string, std::string> metadata;
};

struct LoadOptions {
  // POPE rows carrying a split other than "adversarial" are rejected unless set.
  bool allow_any_pope_split = false;
};

// Canonical schemas (image paths resolve relative to the dataset file):
//   pope_adversarial  JSONL {id, image, text, label: yes|no [, split]}
//   mmvp              CSV header index,pair_id,pattern,question,options,answer[,image]
//   llava_wild, mmhal JSONL {id, image, question, category, reference [, image_content]}
// Throws SchemaError (1-based line) or UnknownPattern.
std::vector<BenchmarkSample> load_benchmark(const std::filesystem::path& path, BenchmarkKind kind,
                                            const LoadOptions& options = {});

// "(a) Floor (b) Carpet" -> {{"a","Floor"},{"b","Carpet"}}.
std::vector<OptionChoice> parse_options(std::string_view text);

// RFC 4180-style record splitting for one line set; exposed for tests.
std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char delimiter);

// --- answer extraction ------------------------------------------------------------

enum class YesNo { yes, no, unparseable };

// (1) first alphabetic token is yes/no; (2) exactly one of the whole words
// yes/no occurs; (3) unparseable. Case-insensitive, total.
YesNo extract_yes_no(std::string_view raw);

// Leading label ("(b)", "b)", "b.", "b:", bare "b"), then a unique "(x)" label
// anywhere, then unique whole-word containment of one choice text.
std::optional<std::string> extract_option(std::string_view raw,
                                          const std::vector<OptionChoice>& choices);

struct Extracted {
  enum class Kind { yes, no, option, text, unparseable };
  Kind kind = Kind::unparseable;
  std::string value;  // option label or free text

  nlohmann::json to_json() const;
  static Extracted from_json(const nlohmann::json& j);
  friend bool operator==(const Extracted&, const Extracted&) = default;
};

Extracted extract_answer(const BenchmarkSample& sample, std::string_view raw);

struct PredictionRecord {
  std::string sample_id;
  std::string condition;
  std::string raw_answer;
  Extracted extracted;
  std::vector<std::string> keywords_used;
  bool fallback_used = false;

  nlohmann::json to_json() const;
  static PredictionRecord from_json(const nlohmann::json& j);
};

// True when the extracted answer matches the gold (discriminative only).
bool is_correct(const BenchmarkSample& sample, const Extracted& extracted);

// --- metrics ----------------------------------------------------------------------

struct BinaryMetrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t unparseable = 0;
  std::size_t total = 0;
  double accuracy = 0, precision = 0, recall = 0, f1 = 0, yes_ratio = 0;
};

// Derived rates from confusion counts; precision/recall are 0 on empty
// denominators and f1 = 0 when p + r = 0. yes_ratio = (tp + fp) / total.
BinaryMetrics binary_metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                                         std::size_t tn, std::size_t unparseable = 0);

// Positive class is "yes". An unparseable answer is scored as the wrong
// answer (fn for gold yes, fp for gold no) and as "no" for the yes-ratio.
// Throws MissingGold.
BinaryMetrics compute_binary_metrics(const std::vector<PredictionRecord>& preds,
                                     const std::map<std::string, bool>& golds);

enum class MmvpMode { per_question, per_pair };

struct MmvpAccuracy {
  MmvpMode mode = MmvpMode::per_question;
  double overall = 0.0;
  std::size_t units = 0;  // questions or pairs
  std::map<std::string, double> per_pattern;
  std::map<std::string, std::size_t> pattern_units;
};

// per_pair: a pair scores only when both of its questions are correct; every
// pair must have exactly two questions. Throws MissingPairId / MissingGold.
MmvpAccuracy compute_mmvp_accuracy(const std::vector<PredictionRecord>& preds,
                                   const std::vector<BenchmarkSample>& golds, MmvpMode mode);

// --- GPT-aided judging -------------------------------------------------------------

enum class JudgeScale { one_to_ten, zero_to_seven };

struct JudgeResult {
  std::string sample_id;
  JudgeScale scale = JudgeScale::one_to_ten;
  std::optional<double> reference_score;
  double candidate_score = 0.0;
  std::string rationale_text;

  nlohmann::json to_json() const;
  static JudgeResult from_json(const nlohmann::json& j);
};

struct JudgeOptions {
  std::string model_id;
  int max_tokens = 512;
};

std::string build_judge_prompt(const BenchmarkSample& sample, std::string_view candidate_answer);

// llava_wild: first line holds two scores in [1, 10] (reference, candidate).
// mmhal: "Rating: <k>" with k in 0..7 (last occurrence). Throws JudgeParseError.
JudgeResult parse_judge_reply(const BenchmarkSample& sample, std::string_view reply);

// Text-only judge call at temperature 0; one re-ask on a malformed reply.
JudgeResult judge_generative(gateway::Gateway& gw, const BenchmarkSample& sample,
                             std::string_view candidate_answer, const JudgeOptions& options);

struct GenerativeReport {
  BenchmarkKind kind = BenchmarkKind::llava_wild;
  std::size_t n = 0;
  // llava_wild: relative score 100 * mean(candidate) / mean(reference).
  // mmhal: mean rating.
  double overall = 0.0;
  std::map<std::string, double> per_category;
  // mmhal only: share of ratings below the cutoff.
  double hallucination_rate = 0.0;
  std::map<std::string, double> hallucination_rate_per_category;
};

inline constexpr double kDefaultHallucinationCutoff = 3.0;

GenerativeReport aggregate_generative(const std::vector<JudgeResult>& results, BenchmarkKind kind,
                                      const std::map<std::string, std::string>& category_of,
                                      double hallucination_cutoff = kDefaultHallucinationCutoff);

// --- information level --------------------------------------------------------------

inline constexpr std::size_t kLowInformationMaxKeywords = 7;

struct InformationSplit {
  std::vector<std::string> low;   // image refs with <= 7 factual keywords
  std::vector<std::string> high;  // image refs with >= 8
};

InformationSplit split_by_information_level(const std::vector<keywords::KeywordRecord>& records);

}  // namespace cfinc::bench
