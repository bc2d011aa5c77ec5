#include "cfinc/keywordgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "cfinc/error.hpp"
#include "cfinc/prompts.hpp"
#include "cfinc/util.hpp"

namespace cfinc::keywords {
using nlohmann::json;

// --- records ---------------------------------------------------------------------

json KeywordRecord::to_json() const {
  return {{"image_ref", image_ref},
          {"factual", factual},
          {"counterfactual_sets", counterfactual_sets},
          {"generation_temperature", generation_temperature},
          {"raw_response", raw_response}};
}

KeywordRecord KeywordRecord::from_json(const json& j) {
  KeywordRecord r;
  r.image_ref = j.at("image_ref").get<std::string>();
  r.factual = j.at("factual").get<std::vector<std::string>>();
  r.counterfactual_sets = j.at("counterfactual_sets").get<std::vector<std::vector<std::string>>>();
  r.generation_temperature = j.value("generation_temperature", 0.8);
  r.raw_response = j.value("raw_response", "");
  return r;
}

// --- prompts ---------------------------------------------------------------------

std::string build_simple_prompt() { return std::string(prompts::keywords_simple()); }

namespace {

std::string count_word(int n) {
  static const char* kWords[] = {"zero", "one", "two", "three", "four", "five",
                                 "six",  "seven", "eight", "nine", "ten"};
  if (n >= 0 && n <= 10) return kWords[n];
  return std::to_string(n);
}

}  // namespace

std::string build_iterative_prompt(int n_sets) {
  std::string golden(prompts::keywords_iterative());
  if (n_sets == 5) return golden;
  if (n_sets < 1) throw std::invalid_argument("build_iterative_prompt: n_sets must be >= 1");

  const std::string five = "generate five sets";
  if (auto pos = golden.find(five); pos != std::string::npos) {
    golden.replace(pos, five.size(),
                   "generate " + count_word(n_sets) + (n_sets == 1 ? " set" : " sets"));
  }
  const std::string first = "\nCounterfactual Keywords 1:";
  const auto scaffold = golden.find(first);
  const auto line_end = golden.find('\n', scaffold + 1);
  const std::string slot = golden.substr(golden.find(':', scaffold) + 1,
                                         line_end - golden.find(':', scaffold) - 1);
  golden.erase(scaffold);
  for (int i = 1; i <= n_sets; ++i) {
    golden += "\nCounterfactual Keywords " + std::to_string(i) + ":" + slot;
  }
  return golden;
}

// --- parsing ---------------------------------------------------------------------

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    s = util::trim(s.substr(1, s.size() - 2));
  }
  return std::string(s);
}

std::vector<std::string> split_top_level(std::string_view body) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    const auto item = unquote(util::trim(body.substr(start, end - start)));
    if (!item.empty()) out.push_back(item);
  };
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c == '(' || c == '[' || c == '{') ++depth;
    if ((c == ')' || c == ']' || c == '}') && depth > 0) --depth;
    if (c == ',' && depth == 0) {
      flush(i);
      start = i + 1;
    }
  }
  flush(body.size());
  return out;
}

bool placeholder_only(const std::vector<std::string>& items) {
  if (items.empty()) return false;
  return std::all_of(items.begin(), items.end(), [](const std::string& s) {
    return s.find_first_not_of("_.…\\ ") == std::string::npos;
  });
}

struct Section {
  bool factual = false;
  std::optional<int> number;
  std::vector<std::string> items;
};

// Reads the list that starts at `pos` (just after the header colon).
std::vector<std::string> read_list(std::string_view text, std::size_t pos) {
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '*')) ++pos;
  if (pos < text.size() && text[pos] == '[') {
    int depth = 0;
    for (std::size_t i = pos; i < text.size(); ++i) {
      if (text[i] == '[') ++depth;
      if (text[i] == ']' && --depth == 0) return split_top_level(text.substr(pos + 1, i - pos - 1));
    }
    // Unclosed bracket: take the rest of the line.
    const auto eol = text.find('\n', pos);
    return split_top_level(text.substr(pos + 1, (eol == std::string_view::npos ? text.size() : eol) - pos - 1));
  }
  const auto eol = text.find('\n', pos);
  return split_top_level(text.substr(pos, (eol == std::string_view::npos ? text.size() : eol) - pos));
}

std::vector<Section> find_sections(std::string_view text) {
  const std::string lower = util::to_lower(text);
  std::vector<Section> out;
  const std::string needle = "keywords";
  for (std::size_t p = lower.find(needle); p != std::string::npos; p = lower.find(needle, p + 1)) {
    // The alphabetic word preceding "keywords".
    std::size_t e = p;
    while (e > 0 && (lower[e - 1] == ' ' || lower[e - 1] == '*' || lower[e - 1] == '_')) --e;
    std::size_t b = e;
    while (b > 0 && is_alpha(lower[b - 1])) --b;
    const std::string_view word(lower.data() + b, e - b);
    Section s;
    if (word == "factual") {
      s.factual = true;
    } else if (word != "counterfactual") {
      continue;
    }
    std::size_t q = p + needle.size();
    if (q < lower.size() && is_alpha(lower[q])) continue;
    while (q < lower.size() && lower[q] == ' ') ++q;
    if (!s.factual && q < lower.size() && is_digit(lower[q])) {
      int n = 0;
      while (q < lower.size() && is_digit(lower[q])) n = n * 10 + (lower[q++] - '0');
      s.number = n;
    }
    while (q < lower.size() && (lower[q] == ' ' || lower[q] == '*' || lower[q] == '_')) ++q;
    if (q >= lower.size() || lower[q] != ':') continue;
    s.items = read_list(text, q + 1);
    if (placeholder_only(s.items)) continue;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

KeywordLists parse_keyword_lists(std::string_view text, int n_expected) {
  if (n_expected < 1) throw std::invalid_argument("parse_keyword_lists: n_expected must be >= 1");
  std::optional<std::vector<std::string>> factual;
  std::optional<std::vector<std::string>> unnumbered;
  std::map<int, std::vector<std::string>> numbered;
  for (auto& s : find_sections(text)) {
    if (s.factual) {
      if (!factual) factual = std::move(s.items);
    } else if (s.number) {
      numbered.try_emplace(*s.number, std::move(s.items));
    } else if (!unnumbered) {
      unnumbered = std::move(s.items);
    }
  }
  if (!factual) throw ParseError("Factual Keywords", std::string(text));
  KeywordLists out;
  out.factual = std::move(*factual);
  for (int i = 1; i <= n_expected; ++i) {
    if (auto it = numbered.find(i); it != numbered.end()) {
      out.counterfactuals.push_back(std::move(it->second));
    } else if (n_expected == 1 && unnumbered) {
      out.counterfactuals.push_back(std::move(*unnumbered));
    } else {
      throw ParseError("Counterfactual Keywords " + std::to_string(i), std::string(text));
    }
  }
  return out;
}

std::string serialize_keyword_lists(const KeywordLists& lists) {
  std::string out = "Factual Keywords: [" + util::join(lists.factual, ", ") + "]";
  for (std::size_t i = 0; i < lists.counterfactuals.size(); ++i) {
    out += "\nCounterfactual Keywords " + std::to_string(i + 1) + ": [" +
           util::join(lists.counterfactuals[i], ", ") + "]";
  }
  return out;
}

// --- generation ------------------------------------------------------------------

gateway::ChatRequest keyword_request(const std::string& image_ref,
                                     const GenerationOptions& options) {
  if (options.n_iterations < 1) throw std::invalid_argument("n_iterations must be >= 1");
  if (options.mode == PromptMode::simple && options.n_iterations != 1) {
    throw std::invalid_argument("simple prompt mode produces exactly one counterfactual set");
  }
  gateway::ChatRequest req;
  req.model_id = options.model_id;
  req.temperature = options.temperature;
  req.max_tokens = options.max_tokens;
  req.seed = options.seed;
  req.messages.push_back({gateway::Role::user,
                          options.mode == PromptMode::simple
                              ? build_simple_prompt()
                              : build_iterative_prompt(options.n_iterations),
                          image_ref});
  return req;
}

KeywordRecord generate_keywords(gateway::Gateway& gw, const std::string& image_ref,
                                const GenerationOptions& options) {
  const auto reply = gw.chat(keyword_request(image_ref, options));
  auto lists = parse_keyword_lists(reply.text, options.n_iterations);
  if (lists.factual.empty()) throw ParseError("Factual Keywords", reply.text);
  KeywordRecord rec;
  rec.image_ref = image_ref;
  rec.factual = std::move(lists.factual);
  rec.counterfactual_sets = std::move(lists.counterfactuals);
  rec.generation_temperature = options.temperature;
  rec.raw_response = reply.text;
  return rec;
}

// --- contaminated mixing -----------------------------------------------------------

std::size_t MixedKeywordSet::factual_count() const {
  return static_cast<std::size_t>(std::count(from_factual.begin(), from_factual.end(), true));
}

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

MixedKeywordSet mix_keywords(const std::vector<std::string>& factual,
                             const std::vector<std::string>& counterfactual, double fraction,
                             std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("mix_keywords: fraction must lie in [0, 1]");
  }
  if (counterfactual.empty()) throw EmptyPool("mix_keywords: counterfactual pool is empty");
  const std::size_t total = counterfactual.size();
  const std::size_t n_factual = std::min(total, round_half_up(fraction * static_cast<double>(total)));
  if (n_factual > 0 && factual.empty()) throw EmptyPool("mix_keywords: factual pool is empty");

  std::mt19937_64 rng(seed);
  auto shuffled_indices = [&rng](std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
  };

  std::vector<std::pair<std::string, bool>> picked;
  picked.reserve(total);
  if (n_factual > 0) {
    auto order = shuffled_indices(factual.size());
    for (std::size_t i = 0; i < n_factual; ++i) {
      picked.emplace_back(factual[order[i % order.size()]], true);
    }
  }
  auto cf_order = shuffled_indices(total);
  for (std::size_t i = 0; i < total - n_factual; ++i) {
    picked.emplace_back(counterfactual[cf_order[i]], false);
  }
  std::shuffle(picked.begin(), picked.end(), rng);

  MixedKeywordSet out;
  out.factual_fraction = fraction;
  out.seed = seed;
  for (auto& [kw, origin] : picked) {
    out.keywords.push_back(std::move(kw));
    out.from_factual.push_back(origin);
  }
  return out;
}

}  // namespace cfinc::keywords
