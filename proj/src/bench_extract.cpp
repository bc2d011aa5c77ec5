#include <cctype>
#include <set>

#include "cfinc/bench.hpp"
#include "cfinc/error.hpp"
#include "cfinc/util.hpp"

namespace cfinc::bench {
using nlohmann::json;

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (is_word_char(c)) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Whole-word, case-insensitive containment of a (possibly multi-word) phrase.
bool contains_phrase(const std::vector<std::string>& words, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > words.size()) return false;
  for (std::size_t i = 0; i + phrase.size() <= words.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < phrase.size() && match; ++j) match = words[i + j] == phrase[j];
    if (match) return true;
  }
  return false;
}

bool has_label(const std::vector<OptionChoice>& choices, std::string_view label) {
  for (const auto& c : choices) {
    if (c.label == label) return true;
  }
  return false;
}

}  // namespace

YesNo extract_yes_no(std::string_view raw) {
  std::string first;
  for (char c : raw) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      first += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!first.empty()) {
      break;
    }
  }
  if (first == "yes") return YesNo::yes;
  if (first == "no") return YesNo::no;

  bool yes = false, no = false;
  for (const auto& w : words_of(raw)) {
    yes = yes || w == "yes";
    no = no || w == "no";
  }
  if (yes != no) return yes ? YesNo::yes : YesNo::no;
  return YesNo::unparseable;
}

std::optional<std::string> extract_option(std::string_view raw,
                                          const std::vector<OptionChoice>& choices) {
  const auto text = util::trim(raw);
  if (text.empty()) return std::nullopt;

  // Leading label.
  std::size_t i = 0;
  const bool paren = text[0] == '(';
  if (paren) ++i;
  if (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) {
    const std::string label(1, static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
    const char next = i + 1 < text.size() ? text[i + 1] : '\0';
    const bool closed = paren ? next == ')'
                              : (next == '\0' || next == ')' || next == '.' || next == ':' ||
                                 next == ',' || std::isspace(static_cast<unsigned char>(next)));
    // A bare leading "a" followed by a space is usually the article.
    const bool article = !paren && label == "a" && next != '\0' &&
                         std::isspace(static_cast<unsigned char>(next));
    if (closed && !article && has_label(choices, label)) return label;
  }

  // A single distinct "(x)" anywhere.
  std::set<std::string> labels;
  for (std::size_t k = 0; k + 2 < text.size(); ++k) {
    if (text[k] == '(' && std::isalpha(static_cast<unsigned char>(text[k + 1])) && text[k + 2] == ')') {
      const std::string label(1, static_cast<char>(std::tolower(static_cast<unsigned char>(text[k + 1]))));
      if (has_label(choices, label)) labels.insert(label);
    }
  }
  if (labels.size() == 1) return *labels.begin();
  if (labels.size() > 1) return std::nullopt;

  // Unique choice text.
  const auto words = words_of(text);
  std::optional<std::string> found;
  for (const auto& c : choices) {
    if (contains_phrase(words, words_of(c.text))) {
      if (found) return std::nullopt;
      found = c.label;
    }
  }
  return found;
}

Extracted extract_answer(const BenchmarkSample& sample, std::string_view raw) {
  switch (sample.benchmark) {
    case BenchmarkKind::pope_adversarial:
      switch (extract_yes_no(raw)) {
        case YesNo::yes: return {Extracted::Kind::yes, "yes"};
        case YesNo::no: return {Extracted::Kind::no, "no"};
        case YesNo::unparseable: return {Extracted::Kind::unparseable, ""};
      }
      break;
    case BenchmarkKind::mmvp: {
      const auto& gold = std::get<OptionGold>(sample.gold);
      if (auto label = extract_option(raw, gold.choices)) return {Extracted::Kind::option, *label};
      return {Extracted::Kind::unparseable, ""};
    }
    case BenchmarkKind::llava_wild:
    case BenchmarkKind::mmhal:
      return {Extracted::Kind::text, std::string(util::trim(raw))};
  }
  return {};
}

bool is_correct(const BenchmarkSample& sample, const Extracted& extracted) {
  if (const auto* yn = std::get_if<YesNoGold>(&sample.gold)) {
    return yn->yes ? extracted.kind == Extracted::Kind::yes
                   : extracted.kind == Extracted::Kind::no;
  }
  if (const auto* opt = std::get_if<OptionGold>(&sample.gold)) {
    return extracted.kind == Extracted::Kind::option && extracted.value == opt->label;
  }
  return false;
}

// --- serialization ------------------------------------------------------------------

namespace {

std::string_view kind_name(Extracted::Kind k) {
  switch (k) {
    case Extracted::Kind::yes: return "yes";
    case Extracted::Kind::no: return "no";
    case Extracted::Kind::option: return "option";
    case Extracted::Kind::text: return "text";
    case Extracted::Kind::unparseable: return "unparseable";
  }
  return "unparseable";
}

Extracted::Kind parse_kind_name(const std::string& s) {
  if (s == "yes") return Extracted::Kind::yes;
  if (s == "no") return Extracted::Kind::no;
  if (s == "option") return Extracted::Kind::option;
  if (s == "text") return Extracted::Kind::text;
  if (s == "unparseable") return Extracted::Kind::unparseable;
  throw std::invalid_argument("unknown extracted kind '" + s + "'");
}

}  // namespace

json Extracted::to_json() const { return {{"kind", kind_name(kind)}, {"value", value}}; }

Extracted Extracted::from_json(const json& j) {
  return {parse_kind_name(j.at("kind").get<std::string>()), j.value("value", "")};
}

json PredictionRecord::to_json() const {
  return {{"sample_id", sample_id},         {"condition", condition},
          {"raw_answer", raw_answer},       {"extracted", extracted.to_json()},
          {"keywords_used", keywords_used}, {"fallback_used", fallback_used}};
}

PredictionRecord PredictionRecord::from_json(const json& j) {
  PredictionRecord p;
  p.sample_id = j.at("sample_id").get<std::string>();
  p.condition = j.at("condition").get<std::string>();
  p.raw_answer = j.at("raw_answer").get<std::string>();
  p.extracted = Extracted::from_json(j.at("extracted"));
  p.keywords_used = j.value("keywords_used", std::vector<std::string>{});
  p.fallback_used = j.value("fallback_used", false);
  return p;
}

}  // namespace cfinc::bench
