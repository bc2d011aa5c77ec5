// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "cfinc/bench.hpp"
#include "cfinc/dvp.hpp"
#include "cfinc/error.hpp"
#include "cfinc/inception.hpp"
#include "cfinc/keywordgen.hpp"
#include "cfinc/prompts.hpp"
#include "cfinc/runner.hpp"
#include "cfinc/store.hpp"
#include "mini_run.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cfinc;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kDvpBudgetSeconds = 5.0;
constexpr double kE2eBudgetSeconds = 10.0;
constexpr double kRelativeScoreTol = 1e-9;

struct Failure {
  std::string detail;
};

void check(bool ok, const std::string& detail) {
  if (!ok) throw Failure{detail};
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::string> names(const std::vector<dvp::ScoredCandidate>& c) {
  std::vector<std::string> out;
  for (const auto& x : c) out.push_back(x.keyword);
  return out;
}

// --- 1 -------------------------------------------------------------------------------

void dvp_oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> size(0, 200), grid(0, 40), pick(0, 59), kpick(0, 2);
  const int ks[] = {10, 20, 30};

  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = static_cast<std::size_t>(size(rng));
    // Scores per distinct keyword text; casing variants are distinct texts.
    std::map<std::string, std::pair<double, double>> table;
    keywords::KeywordRecord rec;
    rec.factual = {"table", "chair"};
    rec.counterfactual_sets.assign(5, {});
    std::vector<dvp::ScoredCandidate> flat;
    for (std::size_t i = 0; i < n; ++i) {
      const int w = pick(rng);
      const std::string kw = (w % 3 == 0 ? "Word" : "word") + std::to_string(w / 3);
      auto [it, fresh] = table.try_emplace(kw, grid(rng) / 40.0, grid(rng) / 40.0);
      rec.counterfactual_sets[i % 5].push_back(kw);
      flat.push_back(testkit::scored(kw, it->second.first, it->second.second));
    }

    // Percentile filter against sort-and-trim.
    const int k = ks[kpick(rng)];
    auto pcfg = dvp::DvpConfig::percentile_profile();
    pcfg.k_percent = k;
    check(names(dvp::visual_filter(flat, pcfg)) == oracle::percentile_trim(flat, k),
          "percentile mismatch at trial " + std::to_string(trial));

    // Absolute-mode select_optimal through a scripted gateway. The library
    // pools sets in set order, so the oracle sees the same order.
    std::vector<dvp::ScoredCandidate> pooled;
    for (const auto& set : rec.counterfactual_sets) {
      for (const auto& kw : set) {
        pooled.push_back(testkit::scored(kw, table[kw].first, table[kw].second));
      }
    }
    auto t = std::make_shared<testkit::LambdaTransport>([&](const gateway::WireRequest& w) -> json {
      const auto body = w.body();
      if (w.kind == gateway::BackendKind::visual_scorer) {
        return {{"score", table.at(body["texts"][0].get<std::string>()).first}};
      }
      const double c = table.at(body["pairs"][0]["hypothesis"].get<std::string>()).second;
      return {{"entailment", (1 - c) / 2}, {"neutral", (1 - c) / 2}, {"contradiction", c}};
    });
    gateway::Channel ch{t};
    gateway::Gateway gw({ch, {}, ch, ch});
    const auto acfg = dvp::DvpConfig::band_profile();
    const auto got = dvp::select_optimal(gw, rec, testkit::mini_image("desk.png"), acfg);
    const auto want = oracle::absolute_optimal(pooled, acfg.low, acfg.high, acfg.tau);
    check(got.keywords == want, "absolute mismatch at trial " + std::to_string(trial));
    check(got.fallback_used == want.empty(), "fallback flag mismatch");
  }
  const double s = seconds_since(t0);
  std::ostringstream d;
  d << "took " << s << " s";
  check(s < kDvpBudgetSeconds, d.str());
}

// --- 2 -------------------------------------------------------------------------------

void trim_law() {
  for (int k : {10, 20, 30}) {
    auto cfg = dvp::DvpConfig::percentile_profile();
    cfg.k_percent = k;
    for (std::size_t n = 0; n <= 200; ++n) {
      std::vector<dvp::ScoredCandidate> c;
      for (std::size_t i = 0; i < n; ++i) {
        c.push_back(testkit::scored("k" + std::to_string(i), std::sin(static_cast<double>(i)), 1));
      }
      const std::size_t expected = n - 2 * (static_cast<std::size_t>(k) * n / 100);
      check(dvp::visual_filter(c, cfg).size() == expected,
            "K=" + std::to_string(k) + " n=" + std::to_string(n));
    }
  }
}

// --- 3 -------------------------------------------------------------------------------

bench::PredictionRecord pred(const std::string& id, bench::Extracted::Kind kind,
                             const std::string& value = {}) {
  bench::PredictionRecord p;
  p.sample_id = id;
  p.extracted = {kind, value};
  return p;
}

void metric_fixtures() {
  // tp=3 fp=1 fn=1 tn=5 built from predictions.
  std::vector<bench::PredictionRecord> preds;
  std::map<std::string, bool> gold;
  auto add = [&](int count, bool gold_yes, bool said_yes) {
    for (int i = 0; i < count; ++i) {
      const auto id = std::to_string(preds.size());
      preds.push_back(pred(id, said_yes ? bench::Extracted::Kind::yes : bench::Extracted::Kind::no));
      gold[id] = gold_yes;
    }
  };
  add(3, true, true);
  add(1, false, true);
  add(1, true, false);
  add(5, false, false);
  const auto m = bench::compute_binary_metrics(preds, gold);
  check(m.tp == 3 && m.fp == 1 && m.fn == 1 && m.tn == 5, "confusion counts");
  check(m.accuracy == 0.8, "accuracy");
  check(m.precision == 0.75 && m.recall == 0.75 && m.f1 == 0.75, "precision/recall/f1");

  // MMVP per_pair: two pairs, one correct answer in each.
  std::vector<bench::BenchmarkSample> golds;
  std::vector<bench::PredictionRecord> mp;
  for (int i = 0; i < 4; ++i) {
    bench::BenchmarkSample s;
    s.sample_id = "m" + std::to_string(i);
    s.benchmark = bench::BenchmarkKind::mmvp;
    s.gold = bench::OptionGold{"a", {{"a", "Yes"}, {"b", "No"}}};
    s.metadata = {{"pair_id", i < 2 ? "p1" : "p2"}, {"pattern", "Text"}};
    golds.push_back(s);
    mp.push_back(pred(s.sample_id, bench::Extracted::Kind::option, i % 2 == 0 ? "a" : "b"));
  }
  const auto acc = bench::compute_mmvp_accuracy(mp, golds, bench::MmvpMode::per_pair);
  check(acc.overall == 0.0 && acc.units == 2, "mmvp per_pair");

  // LLaVA relative score: means 8 (reference) vs 6 (candidate).
  std::vector<bench::JudgeResult> jr;
  for (auto [ref, cand] : {std::pair{9.0, 7.0}, std::pair{7.0, 5.0}}) {
    bench::JudgeResult r;
    r.sample_id = "l" + std::to_string(jr.size());
    r.reference_score = ref;
    r.candidate_score = cand;
    jr.push_back(r);
  }
  const auto rel = bench::aggregate_generative(jr, bench::BenchmarkKind::llava_wild,
                                               {{"l0", "detail"}, {"l1", "reasoning"}});
  check(std::abs(rel.overall - 75.0) <= kRelativeScoreTol, "llava relative score");
}

// --- 4 -------------------------------------------------------------------------------

bool has_placeholder(const std::string& s) {
  return s.find('{') != std::string::npos || s.find('}') != std::string::npos;
}

void golden_prompts() {
  const auto dir = testkit::source_dir() / "prompts";
  check(keywords::build_simple_prompt() == testkit::slurp(dir / "keywords_simple.txt"), "simple");
  check(keywords::build_iterative_prompt(5) == testkit::slurp(dir / "keywords_iterative.txt"),
        "iterative");
  check(std::string(prompts::inception()) == testkit::slurp(dir / "inception.txt"), "inception");

  const auto rendered =
      inception::build_inception_prompt({"cat", "red sofa"}, "Is there a dog in the image?").rendered;
  check(!has_placeholder(rendered), "inception render left a placeholder");
  for (auto kind : {bench::BenchmarkKind::llava_wild, bench::BenchmarkKind::mmhal}) {
    bench::BenchmarkSample s;
    s.benchmark = kind;
    s.question = "What is shown?";
    s.gold = bench::ReferenceWithCategory{"A desk.", "desk, lamp"};
    if (kind == bench::BenchmarkKind::llava_wild) s.gold = bench::ReferenceGold{"A desk."};
    check(!has_placeholder(bench::build_judge_prompt(s, "A lamp.")), "judge render left a placeholder");
  }
}

// --- 5 -------------------------------------------------------------------------------

keywords::KeywordLists random_lists(std::mt19937_64& rng, int n_sets) {
  static const std::vector<std::string> words = {"red", "ball", "dog", "kitchen", "tall", "glass",
                                                 "sunny", "beach", "old-fashioned", "car",
                                                 "cup", "x-ray", "two", "zebra"};
  std::uniform_int_distribution<std::size_t> w(0, words.size() - 1);
  std::uniform_int_distribution<int> len(0, 8), parts(1, 3);
  auto list = [&] {
    std::vector<std::string> out(static_cast<std::size_t>(len(rng)));
    for (auto& item : out) {
      const int p = parts(rng);
      for (int i = 0; i < p; ++i) item += (i ? " " : "") + words[w(rng)];
    }
    return out;
  };
  keywords::KeywordLists l;
  l.factual = list();
  for (int i = 0; i < n_sets; ++i) l.counterfactuals.push_back(list());
  return l;
}

void parser_round_trip() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> sets(1, 6);
  for (int i = 0; i < 500; ++i) {
    const int n = sets(rng);
    const auto lists = random_lists(rng, n);
    const auto text = keywords::serialize_keyword_lists(lists);
    const auto again = keywords::serialize_keyword_lists(keywords::parse_keyword_lists(text, n));
    check(again == text, "round trip changed block " + std::to_string(i));
  }
  try {
    keywords::parse_keyword_lists(
        "Factual Keywords: [a]\nCounterfactual Keywords 1: [b]\nCounterfactual Keywords 3: [c]", 3);
    check(false, "missing section not detected");
  } catch (const ParseError& e) {
    check(e.section() == "Counterfactual Keywords 2", "wrong section named: " + e.section());
    check(std::string(e.what()).find("Counterfactual Keywords 2") != std::string::npos,
          "message lacks the section name");
  }
}

// --- 6 -------------------------------------------------------------------------------

void e2e_mock_determinism() {
  const auto t0 = Clock::now();
  testkit::TempDir dir;
  const std::vector<std::string> conditions = {"baseline", "inception"};
  const auto a = testkit::mini_config(testkit::kMiniPope, dir / "a", conditions);
  const auto b = testkit::mini_config(testkit::kMiniPope, dir / "b", conditions);
  const auto ma = runner::execute(a);
  const auto mb = runner::execute(b);
  check(ma.samples_total == 10, "expected 10 samples");
  check(ma.status == "completed" && mb.status == "completed", "run did not complete");
  check(ma.report_digest == mb.report_digest, "report digests differ");
  check(testkit::slurp(dir / "a" / "report.tsv") == testkit::slurp(dir / "b" / "report.tsv"),
        "report bytes differ");
  const auto resumed = runner::execute(a);
  check(resumed.transport_calls == 0,
        "resume made " + std::to_string(resumed.transport_calls) + " transport calls");
  check(resumed.report_digest == ma.report_digest, "resumed digest differs");
  const double s = seconds_since(t0);
  std::ostringstream d;
  d << "took " << s << " s";
  check(s < kE2eBudgetSeconds, d.str());
}

// --- 7 -------------------------------------------------------------------------------

void ablation() {
  testkit::TempDir dir;
  const auto rc = testkit::mini_config(testkit::kMiniPope, dir / "run",
                                       {"baseline", "inception", "vv_only", "lv_only"});
  check(runner::execute(rc).status == "completed", "ablation run did not complete");
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> optimal;
  for (const auto& r : store::read_all(dir / "run" / "optimal.jsonl", "optimal")) {
    optimal[{r.sample_id, r.condition}] =
        dvp::OptimalKeywords::from_json(r.payload.at("optimal")).keywords;
  }
  const auto cands = store::read_all(dir / "run" / "candidates.jsonl", "candidates");
  check(cands.size() == 5, "expected 5 scored images");
  for (const auto& c : cands) {
    const auto scored = dvp::ScoringResult::from_json(c.payload).candidates;
    check(optimal.at({c.sample_id, "vv_only"}) == names(dvp::dedupe(dvp::visual_filter(scored, rc.dvp))),
          "vv_only differs for " + c.sample_id);
    check(optimal.at({c.sample_id, "lv_only"}) ==
              names(dvp::dedupe(dvp::linguistic_filter(scored, rc.dvp))),
          "lv_only differs for " + c.sample_id);
  }

  std::vector<std::string> factual{"f1", "f2", "f3", "f4"};
  for (double fraction : {0.25, 0.5, 0.75}) {
    for (std::size_t n = 1; n <= 40; ++n) {
      std::vector<std::string> cf;
      for (std::size_t i = 0; i < n; ++i) cf.push_back("c" + std::to_string(i));
      const auto mixed = keywords::mix_keywords(factual, cf, fraction, n * 31);
      const auto want = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
      check(mixed.factual_count() == want && mixed.keywords.size() == n,
            "mix count fraction=" + std::to_string(fraction) + " n=" + std::to_string(n));
    }
  }
}

// --- 8 -------------------------------------------------------------------------------

void information_level() {
  std::vector<keywords::KeywordRecord> recs(2);
  recs[0].image_ref = "seven";
  recs[0].factual.assign(7, "k");
  recs[1].image_ref = "eight";
  recs[1].factual.assign(8, "k");
  const auto split = bench::split_by_information_level(recs);
  check(split.low == std::vector<std::string>{"seven"}, "7 keywords not low");
  check(split.high == std::vector<std::string>{"eight"}, "8 keywords not high");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
      {"dvp_oracle_equivalence", dvp_oracle_equivalence},
      {"trim_law", trim_law},
      {"metric_fixtures", metric_fixtures},
      {"golden_prompts", golden_prompts},
      {"parser_round_trip", parser_round_trip},
      {"e2e_mock_determinism", e2e_mock_determinism},
      {"ablation", ablation},
      {"information_level", information_level},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    try {
      fn();
      std::cout << "PASS " << name << "\n";
    } catch (const Failure& f) {
      std::cout << "FAIL " << name << ": " << f.detail << "\n";
      ++failed;
    } catch (const std::exception& e) {
      std::cout << "FAIL " << name << ": exception: " << e.what() << "\n";
      ++failed;
    }
  }
  return failed == 0 ? 0 : 1;
}
