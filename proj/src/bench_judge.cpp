#include <cmath>
#include <regex>
#include <sstream>

#include "cfinc/bench.hpp"
#include "cfinc/error.hpp"
#include "cfinc/prompts.hpp"
#include "cfinc/util.hpp"

namespace cfinc::bench {
using nlohmann::json;

namespace {

constexpr std::string_view kReask =
    "Your previous reply did not follow the required output format. Reply again and follow the "
    "output format exactly.";

std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& slots) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    bool replaced = false;
    if (tmpl[pos] == '{') {
      for (const auto& [name, value] : slots) {
        const auto slot = "{" + name + "}";
        if (tmpl.substr(pos).starts_with(slot)) {
          out += value;
          pos += slot.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += tmpl[pos++];
  }
  return out;
}

std::string reference_of(const BenchmarkSample& s) {
  if (const auto* r = std::get_if<ReferenceGold>(&s.gold)) return r->text;
  if (const auto* r = std::get_if<ReferenceWithCategory>(&s.gold)) return r->text;
  throw std::invalid_argument("sample '" + s.sample_id + "' has no reference answer");
}

std::string_view scale_name(JudgeScale s) {
  return s == JudgeScale::one_to_ten ? "one_to_ten" : "zero_to_seven";
}

}  // namespace

std::string build_judge_prompt(const BenchmarkSample& sample, std::string_view candidate_answer) {
  const std::string candidate(candidate_answer);
  switch (sample.benchmark) {
    case BenchmarkKind::llava_wild:
      return fill(prompts::judge_llava(), {{"question", sample.question},
                                           {"reference", reference_of(sample)},
                                           {"candidate", candidate}});
    case BenchmarkKind::mmhal: {
      const auto* g = std::get_if<ReferenceWithCategory>(&sample.gold);
      return fill(prompts::judge_mmhal(), {{"category", g ? g->category : std::string()},
                                           {"question", sample.question},
                                           {"reference", reference_of(sample)},
                                           {"candidate", candidate}});
    }
    default:
      throw std::invalid_argument("judging applies to generative benchmarks only");
  }
}

JudgeResult parse_judge_reply(const BenchmarkSample& sample, std::string_view reply) {
  JudgeResult r;
  r.sample_id = sample.sample_id;
  const std::string text(reply);

  if (sample.benchmark == BenchmarkKind::llava_wild) {
    r.scale = JudgeScale::one_to_ten;
    const auto body = util::trim(text);
    const auto nl = body.find('\n');
    const std::string first(body.substr(0, nl));
    // Two whitespace- or comma-separated numbers and nothing else.
    std::string line = first;
    for (auto& ch : line) {
      if (ch == ',') ch = ' ';
    }
    static const std::regex number(R"(\d+(?:\.\d+)?)");
    std::vector<double> values;
    std::istringstream tokens(line);
    for (std::string tok; tokens >> tok;) {
      if (!std::regex_match(tok, number)) {
        throw JudgeParseError("judge reply first line must hold exactly two scores", text);
      }
      values.push_back(std::stod(tok));
    }
    if (values.size() != 2) {
      throw JudgeParseError("judge reply first line must hold exactly two scores", text);
    }
    for (double v : values) {
      if (v < 1.0 || v > 10.0) throw JudgeParseError("judge score outside 1..10", text);
    }
    r.reference_score = values[0];
    r.candidate_score = values[1];
    r.rationale_text = nl == std::string_view::npos ? "" : std::string(util::trim(body.substr(nl + 1)));
    return r;
  }

  if (sample.benchmark == BenchmarkKind::mmhal) {
    r.scale = JudgeScale::zero_to_seven;
    static const std::regex rating(R"(rating\s*:\s*\**\s*(\d+))", std::regex::icase);
    std::smatch last;
    bool found = false;
    for (std::sregex_iterator it(text.begin(), text.end(), rating), end; it != end; ++it) {
      last = *it;
      found = true;
    }
    if (!found) throw JudgeParseError("judge reply has no 'Rating: <k>' line", text);
    const int k = std::stoi(last[1].str());
    if (k < 0 || k > 7) throw JudgeParseError("judge rating outside 0..7", text);
    r.candidate_score = k;
    r.rationale_text = text.substr(0, static_cast<std::size_t>(last.position(0)));
    r.rationale_text = std::string(util::trim(r.rationale_text));
    return r;
  }
  throw std::invalid_argument("judging applies to generative benchmarks only");
}

JudgeResult judge_generative(gateway::Gateway& gw, const BenchmarkSample& sample,
                             std::string_view candidate_answer, const JudgeOptions& options) {
  gateway::ChatRequest req;
  req.model_id = options.model_id;
  req.temperature = 0.0;
  req.max_tokens = options.max_tokens;
  req.messages.push_back({gateway::Role::user, build_judge_prompt(sample, candidate_answer), {}});

  const auto first = gw.chat(req, gateway::ChatRoute::judge);
  try {
    return parse_judge_reply(sample, first.text);
  } catch (const JudgeParseError&) {
  }
  req.messages.push_back({gateway::Role::assistant, first.text, {}});
  req.messages.push_back({gateway::Role::user, std::string(kReask), {}});
  const auto second = gw.chat(req, gateway::ChatRoute::judge);
  try {
    return parse_judge_reply(sample, second.text);
  } catch (const JudgeParseError& e) {
    throw JudgeParseError(std::string(e.what()) + " (after re-ask)",
                          first.text + "\n---\n" + second.text);
  }
}

json JudgeResult::to_json() const {
  json j = {{"sample_id", sample_id},
            {"scale", scale_name(scale)},
            {"candidate_score", candidate_score},
            {"rationale_text", rationale_text}};
  j["reference_score"] = reference_score ? json(*reference_score) : json(nullptr);
  return j;
}

JudgeResult JudgeResult::from_json(const json& j) {
  JudgeResult r;
  r.sample_id = j.at("sample_id").get<std::string>();
  const auto scale = j.at("scale").get<std::string>();
  if (scale == "one_to_ten") {
    r.scale = JudgeScale::one_to_ten;
  } else if (scale == "zero_to_seven") {
    r.scale = JudgeScale::zero_to_seven;
  } else {
    throw std::invalid_argument("unknown judge scale '" + scale + "'");
  }
  if (j.contains("reference_score") && !j["reference_score"].is_null()) {
    r.reference_score = j["reference_score"].get<double>();
  }
  r.candidate_score = j.at("candidate_score").get<double>();
  r.rationale_text = j.value("rationale_text", "");
  return r;
}

}  // namespace cfinc::bench
