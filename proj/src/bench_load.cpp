#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "cfinc/bench.hpp"
#include "cfinc/error.hpp"
#include "cfinc/util.hpp"

namespace cfinc::bench {
using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::pope_adversarial: return "pope_adversarial";
    case BenchmarkKind::mmvp: return "mmvp";
    case BenchmarkKind::llava_wild: return "llava_wild";
    case BenchmarkKind::mmhal: return "mmhal";
  }
  return "unknown";
}

BenchmarkKind parse_benchmark_kind(std::string_view s) {
  const auto k = util::to_lower(util::trim(s));
  if (k == "pope_adversarial" || k == "pope") return BenchmarkKind::pope_adversarial;
  if (k == "mmvp") return BenchmarkKind::mmvp;
  if (k == "llava_wild" || k == "llava") return BenchmarkKind::llava_wild;
  if (k == "mmhal") return BenchmarkKind::mmhal;
  throw ConfigError("unknown benchmark kind '" + std::string(s) + "'");
}

bool is_discriminative(BenchmarkKind kind) {
  return kind == BenchmarkKind::pope_adversarial || kind == BenchmarkKind::mmvp;
}

// --- delimited text ----------------------------------------------------------------

std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char delimiter) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"' && field.empty()) {
      quoted = true;
      any = true;
    } else if (ch == delimiter) {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      } else {
        rows.emplace_back();  // blank line keeps line numbering
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += ch;
      any = true;
    }
  }
  if (quoted) throw SchemaError(rows.size() + 1, "unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<OptionChoice> parse_options(std::string_view text) {
  // Labels are "(x)" with a single letter; the text runs to the next label.
  std::vector<std::pair<std::size_t, char>> marks;
  for (std::size_t i = 0; i + 2 < text.size(); ++i) {
    if (text[i] == '(' && std::isalpha(static_cast<unsigned char>(text[i + 1])) &&
        text[i + 2] == ')') {
      marks.emplace_back(i, static_cast<char>(std::tolower(static_cast<unsigned char>(text[i + 1]))));
    }
  }
  std::vector<OptionChoice> out;
  for (std::size_t m = 0; m < marks.size(); ++m) {
    const auto begin = marks[m].first + 3;
    const auto end = m + 1 < marks.size() ? marks[m + 1].first : text.size();
    out.push_back({std::string(1, marks[m].second),
                   std::string(util::trim(text.substr(begin, end - begin)))});
  }
  return out;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOFailure("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string resolve_image(const fs::path& dataset, const std::string& image) {
  const fs::path p(image);
  if (p.is_absolute()) return p.string();
  return (dataset.parent_path() / p).lexically_normal().string();
}

std::string id_string(const json& v, std::size_t line) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw SchemaError(line, "id must be a string or integer");
}

std::string required_string(const json& row, const char* key, std::size_t line) {
  if (!row.contains(key) || !row[key].is_string()) {
    throw SchemaError(line, std::string("missing string field '") + key + "'");
  }
  return row[key].get<std::string>();
}

template <typename Fn>
void for_each_jsonl(const fs::path& path, Fn&& fn) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (util::trim(line).empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(number, std::string("invalid JSON: ") + e.what());
    }
    if (!row.is_object()) throw SchemaError(number, "row is not an object");
    fn(row, number);
  }
}

std::vector<BenchmarkSample> load_pope(const fs::path& path, const LoadOptions& options) {
  std::vector<BenchmarkSample> out;
  for_each_jsonl(path, [&](const json& row, std::size_t line) {
    if (row.contains("split") && !options.allow_any_pope_split) {
      const auto split = util::to_lower(row.at("split").get<std::string>());
      if (split != "adversarial") throw SchemaError(line, "POPE split '" + split + "' is not adversarial");
    }
    BenchmarkSample s;
    s.benchmark = BenchmarkKind::pope_adversarial;
    if (!row.contains("id")) throw SchemaError(line, "missing field 'id'");
    s.sample_id = id_string(row["id"], line);
    s.image_ref = resolve_image(path, required_string(row, "image", line));
    s.question = row.contains("text") ? required_string(row, "text", line)
                                      : required_string(row, "question", line);
    const auto label = util::to_lower(util::trim(required_string(row, "label", line)));
    if (label != "yes" && label != "no") throw SchemaError(line, "label must be yes or no");
    s.gold = YesNoGold{label == "yes"};
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<BenchmarkSample> load_generative(const fs::path& path, BenchmarkKind kind) {
  std::vector<BenchmarkSample> out;
  for_each_jsonl(path, [&](const json& row, std::size_t line) {
    BenchmarkSample s;
    s.benchmark = kind;
    if (!row.contains("id")) throw SchemaError(line, "missing field 'id'");
    s.sample_id = id_string(row["id"], line);
    s.image_ref = resolve_image(path, required_string(row, "image", line));
    s.question = required_string(row, "question", line);
    const auto category = required_string(row, "category", line);
    const auto reference = required_string(row, "reference", line);
    s.metadata["category"] = category;
    if (kind == BenchmarkKind::llava_wild) {
      if (std::find(kLlavaCategories.begin(), kLlavaCategories.end(), category) ==
          kLlavaCategories.end()) {
        throw SchemaError(line, "unknown LLaVA category '" + category + "'");
      }
      s.gold = ReferenceGold{reference};
    } else {
      std::string content;
      if (row.contains("image_content")) {
        const auto& c = row["image_content"];
        if (c.is_array()) {
          content = util::join(c.get<std::vector<std::string>>(), ", ");
        } else {
          content = c.get<std::string>();
        }
      }
      s.gold = ReferenceWithCategory{reference, content};
    }
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<BenchmarkSample> load_mmvp(const fs::path& path) {
  const char delim = path.extension() == ".tsv" ? '\t' : ',';
  const auto rows = parse_delimited(read_file(path), delim);
  if (rows.empty()) throw SchemaError(1, "missing header row");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    col[util::to_lower(util::trim(rows[0][i]))] = i;
  }
  for (const char* name : {"index", "pair_id", "pattern", "question", "options", "answer"}) {
    if (!col.contains(name)) throw SchemaError(1, std::string("missing column '") + name + "'");
  }
  std::vector<BenchmarkSample> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t line = r + 1;
    if (row.empty()) continue;
    auto cell = [&](const char* name) -> std::string {
      const auto idx = col.at(name);
      if (idx >= row.size()) throw SchemaError(line, std::string("missing cell '") + name + "'");
      return std::string(util::trim(row[idx]));
    };
    BenchmarkSample s;
    s.benchmark = BenchmarkKind::mmvp;
    s.sample_id = cell("index");
    if (s.sample_id.empty()) throw SchemaError(line, "empty index");
    const auto pattern = cell("pattern");
    const auto known = std::find_if(kMmvpPatterns.begin(), kMmvpPatterns.end(),
                                    [&](std::string_view p) { return util::iequals(p, pattern); });
    if (known == kMmvpPatterns.end()) throw UnknownPattern(line, pattern);
    s.metadata["pattern"] = std::string(*known);
    const auto pair = cell("pair_id");
    if (!pair.empty()) s.metadata["pair_id"] = pair;
    s.question = cell("question");
    OptionGold gold;
    gold.choices = parse_options(cell("options"));
    if (gold.choices.size() < 2) throw SchemaError(line, "options need at least two labeled choices");
    const auto answer = cell("answer");
    const auto label = extract_option(answer, gold.choices);
    if (!label) throw SchemaError(line, "answer '" + answer + "' matches no option");
    gold.label = *label;
    s.gold = std::move(gold);
    std::string image = col.contains("image") && col["image"] < row.size()
                            ? std::string(util::trim(row[col["image"]]))
                            : std::string();
    if (image.empty()) image = "MMVP Images/" + s.sample_id + ".jpg";
    s.image_ref = resolve_image(path, image);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<BenchmarkSample> load_benchmark(const fs::path& path, BenchmarkKind kind,
                                            const LoadOptions& options) {
  std::vector<BenchmarkSample> samples;
  switch (kind) {
    case BenchmarkKind::pope_adversarial: samples = load_pope(path, options); break;
    case BenchmarkKind::mmvp: samples = load_mmvp(path); break;
    case BenchmarkKind::llava_wild:
    case BenchmarkKind::mmhal: samples = load_generative(path, kind); break;
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!seen.insert(samples[i].sample_id).second) {
      throw SchemaError(i + 1, "duplicate sample id '" + samples[i].sample_id + "'");
    }
  }
  return samples;
}

}  // namespace cfinc::bench
