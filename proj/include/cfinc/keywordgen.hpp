#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfinc/gateway.hpp"
#include "json.hpp"

namespace cfinc::keywords {

// Factual keywords plus N iterated counterfactual keyword lists for one image.
struct KeywordRecord {
  std::string image_ref;
  std::vector<std::string> factual;
  std::vector<std::vector<std::string>> counterfactual_sets;
  double generation_temperature = 0.8;
  std::string raw_response;

  nlohmann::json to_json() const;
  static KeywordRecord from_json(const nlohmann::json& j);
};

struct KeywordLists {
  std::vector<std::string> factual;
  std::vector<std::vector<std::string>> counterfactuals;

  friend bool operator==(const KeywordLists&, const KeywordLists&) = default;
};

// Single-set instruction, byte-identical to prompts/keywords_simple.txt.
std::string build_simple_prompt();

// Progressive instruction. For the default of five sets this is byte-identical
// to prompts/keywords_iterative.txt; other counts rewrite the set count and
// the numbered scaffold lines.
std::string build_iterative_prompt(int n_sets = 5);

// Extracts the bracketed lists following "Factual Keywords:" and
// "Counterfactual Keywords <i>:" headers. Headers are matched
// case-insensitively, surrounding prose and markdown emphasis are tolerated,
// and entries are split on top-level commas only, so multi-word phrases
// survive. Lists made only of "_" / "..." placeholders (an echoed prompt) are
// ignored. With n_expected == 1 an unnumbered "Counterfactual Keywords:"
// header is accepted. Extra sets beyond n_expected are dropped.
// Throws ParseError naming the first missing section.
KeywordLists parse_keyword_lists(std::string_view text, int n_expected);

// Canonical text form; parse_keyword_lists inverts it.
std::string serialize_keyword_lists(const KeywordLists& lists);

enum class PromptMode { simple, iterative };

struct GenerationOptions {
  std::string model_id;
  int n_iterations = 5;
  PromptMode mode = PromptMode::iterative;
  double temperature = 0.8;
  int max_tokens = 1024;
  std::optional<std::int64_t> seed;
};

// One chat call with the keyword prompt attached to the image. Simple mode
// requires n_iterations == 1. Throws ParseError (raw reply preserved) when the
// reply lacks a section or has no factual keywords.
KeywordRecord generate_keywords(gateway::Gateway& gw, const std::string& image_ref,
                                const GenerationOptions& options);

gateway::ChatRequest keyword_request(const std::string& image_ref,
                                     const GenerationOptions& options);

// Keyword list contaminated with a given share of factual terms.
struct MixedKeywordSet {
  std::vector<std::string> keywords;
  std::vector<bool> from_factual;  // parallel to keywords
  double factual_fraction = 0.0;
  std::uint64_t seed = 0;

  std::size_t factual_count() const;
};

// Round half up; the rule used for the factual share.
std::size_t round_half_up(double x);

// Builds |counterfactual| keywords: round_half_up(fraction * n) drawn from the
// factual list without replacement (cycling once exhausted), the rest drawn
// from the counterfactual list without replacement, then shuffled. Fully
// determined by the seed. Throws EmptyPool when a needed source is empty.
MixedKeywordSet mix_keywords(const std::vector<std::string>& factual,
                             const std::vector<std::string>& counterfactual, double fraction,
                             std::uint64_t seed);

}  // namespace cfinc::keywords
