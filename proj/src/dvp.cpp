#include "cfinc/dvp.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <set>

#include "cfinc/error.hpp"
#include "cfinc/util.hpp"

namespace cfinc::dvp {
using nlohmann::json;

// --- serialization ------------------------------------------------------------------

json ScoredCandidate::to_json() const {
  return {{"keyword", keyword},           {"iteration", iteration},
          {"position", position},         {"visual_score", visual_score},
          {"nli", nli.to_json()},         {"premise_used", premise_used}};
}

ScoredCandidate ScoredCandidate::from_json(const json& j) {
  ScoredCandidate c;
  c.keyword = j.at("keyword").get<std::string>();
  c.iteration = j.at("iteration").get<int>();
  c.position = j.value("position", std::size_t{0});
  c.visual_score = j.at("visual_score").get<double>();
  c.nli = gateway::NliScores::from_json(j.at("nli"));
  c.premise_used = j.value("premise_used", "");
  return c;
}

json ScoringResult::to_json() const {
  json cands = json::array();
  for (const auto& c : candidates) cands.push_back(c.to_json());
  json drops = json::array();
  for (const auto& d : dropped) {
    drops.push_back({{"keyword", d.keyword}, {"iteration", d.iteration}, {"reason", d.reason}});
  }
  return {{"candidates", std::move(cands)}, {"dropped", std::move(drops)}};
}

ScoringResult ScoringResult::from_json(const json& j) {
  ScoringResult r;
  for (const auto& c : j.at("candidates")) r.candidates.push_back(ScoredCandidate::from_json(c));
  for (const auto& d : j.value("dropped", json::array())) {
    r.dropped.push_back({d.at("keyword").get<std::string>(), d.at("iteration").get<int>(),
                         d.value("reason", "")});
  }
  return r;
}

json OptimalKeywords::to_json() const {
  json prov = json::array();
  for (const auto& c : provenance) prov.push_back(c.to_json());
  return {{"keywords", keywords}, {"provenance", std::move(prov)}, {"fallback_used", fallback_used}};
}

OptimalKeywords OptimalKeywords::from_json(const json& j) {
  OptimalKeywords o;
  o.keywords = j.at("keywords").get<std::vector<std::string>>();
  for (const auto& c : j.value("provenance", json::array())) {
    o.provenance.push_back(ScoredCandidate::from_json(c));
  }
  o.fallback_used = j.at("fallback_used").get<bool>();
  return o;
}

// --- config -----------------------------------------------------------------------

void DvpConfig::validate() const {
  if (visual_mode == VisualMode::percentile && !(k_percent > 0.0 && k_percent < 50.0)) {
    throw ConfigError("percentile mode needs 0 < K < 50");
  }
  if (visual_mode == VisualMode::absolute && !(low < high)) {
    throw ConfigError("absolute mode needs low < high");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (n_iterations < 1) throw ConfigError("n_iterations must be >= 1");
}

DvpConfig DvpConfig::percentile_profile() { return DvpConfig{}; }

DvpConfig DvpConfig::band_profile() {
  DvpConfig c;
  c.visual_mode = VisualMode::absolute;
  c.low = 0.2;
  c.high = 0.8;
  c.tau = 0.8;
  return c;
}

json DvpConfig::to_json() const {
  return {{"visual_mode", visual_mode == VisualMode::percentile ? "percentile" : "absolute"},
          {"k_percent", k_percent},
          {"low", low},
          {"high", high},
          {"tau", tau},
          {"n_iterations", n_iterations},
          {"premise_policy",
           premise_policy == PremisePolicy::aligned_then_joined ? "aligned_then_joined"
                                                                : "joined_only"},
          {"dedupe", dedupe},
          {"visual_enabled", visual_enabled},
          {"linguistic_enabled", linguistic_enabled},
          {"hypothesis_template", hypothesis_template}};
}

DvpConfig DvpConfig::from_json(const json& j) {
  DvpConfig c;
  const auto mode = j.value("visual_mode", "percentile");
  if (mode == "percentile") {
    c.visual_mode = VisualMode::percentile;
  } else if (mode == "absolute") {
    c.visual_mode = VisualMode::absolute;
  } else {
    throw ConfigError("unknown visual_mode '" + mode + "'");
  }
  c.k_percent = j.value("k_percent", c.k_percent);
  c.low = j.value("low", c.low);
  c.high = j.value("high", c.high);
  c.tau = j.value("tau", c.tau);
  c.n_iterations = j.value("n_iterations", c.n_iterations);
  const auto policy = j.value("premise_policy", "aligned_then_joined");
  if (policy == "aligned_then_joined") {
    c.premise_policy = PremisePolicy::aligned_then_joined;
  } else if (policy == "joined_only") {
    c.premise_policy = PremisePolicy::joined_only;
  } else {
    throw ConfigError("unknown premise_policy '" + policy + "'");
  }
  c.dedupe = j.value("dedupe", true);
  c.visual_enabled = j.value("visual_enabled", true);
  c.linguistic_enabled = j.value("linguistic_enabled", true);
  c.hypothesis_template = j.value("hypothesis_template", "");
  return c;
}

// --- scoring ----------------------------------------------------------------------

std::string premise_for(const keywords::KeywordRecord& record, std::size_t position,
                        PremisePolicy policy) {
  if (policy == PremisePolicy::aligned_then_joined && position < record.factual.size()) {
    return record.factual[position];
  }
  return util::join(record.factual, ", ");
}

namespace {

std::string hypothesis_for(const std::string& keyword, const std::string& tmpl) {
  if (tmpl.empty()) return keyword;
  std::string out = tmpl;
  const std::string slot = "{keyword}";
  if (auto pos = out.find(slot); pos != std::string::npos) out.replace(pos, slot.size(), keyword);
  return out;
}

}  // namespace

ScoringResult score_candidates(gateway::Gateway& gw, const keywords::KeywordRecord& record,
                               const std::string& image_ref, const DvpConfig& config,
                               int parallelism) {
  struct Pending {
    std::string keyword;
    int iteration;
    std::size_t position;
  };
  std::vector<Pending> pool;
  for (std::size_t s = 0; s < record.counterfactual_sets.size(); ++s) {
    const auto& set = record.counterfactual_sets[s];
    for (std::size_t i = 0; i < set.size(); ++i) {
      pool.push_back({set[i], static_cast<int>(s + 1), i});
    }
  }

  std::vector<std::optional<ScoredCandidate>> scored(pool.size());
  std::vector<std::string> errors(pool.size());
  std::vector<std::exception_ptr> failures(pool.size());
  util::parallel_for(pool.size(), parallelism, [&](std::size_t i) {
    const auto& p = pool[i];
    try {
      ScoredCandidate c;
      c.keyword = p.keyword;
      c.iteration = p.iteration;
      c.position = p.position;
      c.premise_used = premise_for(record, p.position, config.premise_policy);
      c.visual_score = gw.clip_score(image_ref, p.keyword);
      c.nli = gw.nli(c.premise_used, hypothesis_for(p.keyword, config.hypothesis_template));
      scored[i] = std::move(c);
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
      failures[i] = std::current_exception();
    }
  });

  ScoringResult out;
  std::exception_ptr last_failure;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (scored[i]) {
      out.candidates.push_back(std::move(*scored[i]));
    } else {
      std::clog << "dvp: dropping candidate '" << pool[i].keyword << "' (iteration "
                << pool[i].iteration << "): " << errors[i] << "\n";
      out.dropped.push_back({pool[i].keyword, pool[i].iteration, errors[i]});
      last_failure = failures[i];
    }
  }
  if (out.candidates.empty() && last_failure) std::rethrow_exception(last_failure);
  return out;
}

// --- filters ----------------------------------------------------------------------

std::size_t trim_count(double k_percent, std::size_t n) {
  return static_cast<std::size_t>(std::floor(k_percent * static_cast<double>(n) / 100.0));
}

std::vector<ScoredCandidate> visual_filter(const std::vector<ScoredCandidate>& cands,
                                           const DvpConfig& config) {
  std::vector<ScoredCandidate> out;
  if (config.visual_mode == VisualMode::absolute) {
    for (const auto& c : cands) {
      if (c.visual_score >= config.low && c.visual_score <= config.high) out.push_back(c);
    }
    return out;
  }
  const std::size_t n = cands.size();
  const std::size_t trim = trim_count(config.k_percent, n);
  if (2 * trim >= n) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cands[a].visual_score < cands[b].visual_score;
  });
  std::vector<bool> keep(n, false);
  for (std::size_t r = trim; r < n - trim; ++r) keep[order[r]] = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.push_back(cands[i]);
  }
  return out;
}

std::vector<ScoredCandidate> linguistic_filter(const std::vector<ScoredCandidate>& cands,
                                               const DvpConfig& config) {
  std::vector<ScoredCandidate> out;
  for (const auto& c : cands) {
    if (c.nli.contradiction() >= config.tau) out.push_back(c);
  }
  return out;
}

std::vector<ScoredCandidate> dedupe(const std::vector<ScoredCandidate>& cands) {
  std::set<std::string> seen;
  std::vector<ScoredCandidate> out;
  for (const auto& c : cands) {
    if (seen.insert(util::to_lower(c.keyword)).second) out.push_back(c);
  }
  return out;
}

OptimalKeywords select_from_scored(const std::vector<ScoredCandidate>& cands,
                                   const DvpConfig& config) {
  config.validate();
  auto survivors = config.visual_enabled ? visual_filter(cands, config) : cands;
  if (config.linguistic_enabled) survivors = linguistic_filter(survivors, config);
  if (config.dedupe) survivors = dedupe(survivors);

  OptimalKeywords out;
  for (const auto& c : survivors) out.keywords.push_back(c.keyword);
  out.provenance = std::move(survivors);
  out.fallback_used = out.keywords.empty();
  return out;
}

OptimalKeywords select_optimal(gateway::Gateway& gw, const keywords::KeywordRecord& record,
                               const std::string& image_ref, const DvpConfig& config,
                               int parallelism) {
  config.validate();
  const auto scored = score_candidates(gw, record, image_ref, config, parallelism);
  return select_from_scored(scored.candidates, config);
}

// --- trend ------------------------------------------------------------------------

std::vector<TrendRow> iteration_trend(const std::vector<ScoredCandidate>& cands) {
  std::map<int, TrendRow> rows;
  for (const auto& c : cands) {
    auto& row = rows[c.iteration];
    row.iteration = c.iteration;
    row.mean_visual += c.visual_score;
    row.mean_contradiction += c.nli.contradiction();
    ++row.count;
  }
  std::vector<TrendRow> out;
  for (auto& [it, row] : rows) {
    row.mean_visual /= static_cast<double>(row.count);
    row.mean_contradiction /= static_cast<double>(row.count);
    out.push_back(row);
  }
  return out;
}

}  // namespace cfinc::dvp
