#include <gtest/gtest.h>

#include <random>

#include "cfinc/dvp.hpp"
#include "cfinc/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cfinc;
using namespace cfinc::dvp;
using cfinc::testkit::LambdaTransport;
using cfinc::testkit::scored;
using nlohmann::json;

namespace {

std::vector<std::string> names(const std::vector<ScoredCandidate>& c) {
  std::vector<std::string> out;
  for (const auto& x : c) out.push_back(x.keyword);
  return out;
}

// Coarse score grid so ties are common.
std::vector<ScoredCandidate> random_set(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> grid(0, 20), word(0, 30);
  std::vector<ScoredCandidate> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int w = word(rng);
    out.push_back(scored((w % 2 ? "Kw" : "kw") + std::to_string(w / 2), grid(rng) / 20.0,
                         grid(rng) / 20.0, 1 + static_cast<int>(i % 5)));
  }
  return out;
}

}  // namespace

TEST(Dvp, TrimCount) {
  EXPECT_EQ(trim_count(20, 0), 0u);
  EXPECT_EQ(trim_count(20, 4), 0u);
  EXPECT_EQ(trim_count(20, 5), 1u);
  EXPECT_EQ(trim_count(20, 14), 2u);
  EXPECT_EQ(trim_count(10, 200), 20u);
  EXPECT_EQ(trim_count(30, 7), 2u);
}

TEST(Dvp, PercentileFilterKeepsMiddleInInputOrder) {
  std::vector<ScoredCandidate> c{scored("a", 0.9, 1), scored("b", 0.1, 1), scored("c", 0.5, 1),
                                 scored("d", 0.4, 1), scored("e", 0.6, 1)};
  auto cfg = DvpConfig::percentile_profile();
  EXPECT_EQ(names(visual_filter(c, cfg)), (std::vector<std::string>{"c", "d", "e"}));
}

TEST(Dvp, PercentileTenEvenlySpaced) {
  std::vector<ScoredCandidate> c;
  for (int i = 0; i < 10; ++i) c.push_back(scored("k" + std::to_string(i), 0.10 + 0.05 * i, 1));
  EXPECT_EQ(names(visual_filter(c, DvpConfig::percentile_profile())),
            (std::vector<std::string>{"k2", "k3", "k4", "k5", "k6", "k7"}));
}

TEST(Dvp, PercentileTiesBrokenByInputOrder) {
  std::vector<ScoredCandidate> c{scored("a", 0.5, 1), scored("b", 0.5, 1), scored("c", 0.5, 1),
                                 scored("d", 0.5, 1), scored("e", 0.5, 1)};
  EXPECT_EQ(names(visual_filter(c, DvpConfig::percentile_profile())),
            (std::vector<std::string>{"b", "c", "d"}));
}

TEST(Dvp, PercentileMatchesOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_set(rng, rng() % 60);
    for (int k : {10, 20, 30}) {
      auto cfg = DvpConfig::percentile_profile();
      cfg.k_percent = k;
      EXPECT_EQ(names(visual_filter(c, cfg)), oracle::percentile_trim(c, k));
    }
  }
}

TEST(Dvp, AbsoluteBandIsInclusive) {
  std::vector<ScoredCandidate> c{scored("lo", 0.2, 1), scored("hi", 0.8, 1),
                                 scored("under", 0.1999, 1), scored("over", 0.8001, 1)};
  const auto cfg = DvpConfig::band_profile();
  EXPECT_EQ(names(visual_filter(c, cfg)), (std::vector<std::string>{"lo", "hi"}));
}

TEST(Dvp, LinguisticThresholdInclusive) {
  std::vector<ScoredCandidate> c{scored("at", 0.5, 0.9), scored("below", 0.5, 0.8999),
                                 scored("above", 0.5, 0.95)};
  EXPECT_EQ(names(linguistic_filter(c, DvpConfig::percentile_profile())),
            (std::vector<std::string>{"at", "above"}));
}

TEST(Dvp, DedupeCaseInsensitiveFirstWins) {
  std::vector<ScoredCandidate> c{scored("Cat", 0.1, 1, 2), scored("cat", 0.2, 1, 3),
                                 scored("dog", 0.3, 1), scored("CAT", 0.4, 1)};
  const auto d = dedupe(c);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].keyword, "Cat");
  EXPECT_EQ(d[0].iteration, 2);
}

TEST(Dvp, AbsoluteSelectMatchesOracle) {
  std::mt19937_64 rng(11);
  const auto cfg = DvpConfig::band_profile();
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_set(rng, rng() % 80);
    const auto got = select_from_scored(c, cfg);
    const auto want = oracle::absolute_optimal(c, cfg.low, cfg.high, cfg.tau);
    EXPECT_EQ(got.keywords, want);
    EXPECT_EQ(got.fallback_used, want.empty());
  }
}

TEST(Dvp, DisabledFiltersAreIdentity) {
  std::mt19937_64 rng(3);
  const auto c = random_set(rng, 40);
  auto cfg = DvpConfig::percentile_profile();
  cfg.dedupe = false;
  cfg.linguistic_enabled = false;
  EXPECT_EQ(select_from_scored(c, cfg).keywords, names(visual_filter(c, cfg)));
  cfg.linguistic_enabled = true;
  cfg.visual_enabled = false;
  EXPECT_EQ(select_from_scored(c, cfg).keywords, names(linguistic_filter(c, cfg)));
}

TEST(Dvp, EmptyResultIsFallback) {
  const auto r = select_from_scored({scored("x", 0.5, 0.1)}, DvpConfig::percentile_profile());
  EXPECT_TRUE(r.keywords.empty());
  EXPECT_TRUE(r.fallback_used);
  EXPECT_TRUE(select_from_scored({}, DvpConfig::percentile_profile()).fallback_used);
}

TEST(Dvp, ConfigValidation) {
  auto c = DvpConfig::percentile_profile();
  EXPECT_NO_THROW(c.validate());
  c.k_percent = 50;
  EXPECT_THROW(c.validate(), ConfigError);
  c = DvpConfig::band_profile();
  c.low = 0.9;
  EXPECT_THROW(c.validate(), ConfigError);
  c = DvpConfig::percentile_profile();
  c.tau = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  const auto a = DvpConfig::band_profile();
  EXPECT_EQ(a.visual_mode, VisualMode::absolute);
  EXPECT_DOUBLE_EQ(a.tau, 0.8);
  EXPECT_EQ(DvpConfig::from_json(a.to_json()).to_json(), a.to_json());
}

TEST(Dvp, PremisePolicy) {
  keywords::KeywordRecord rec;
  rec.factual = {"dog", "ball"};
  EXPECT_EQ(premise_for(rec, 1, PremisePolicy::aligned_then_joined), "ball");
  EXPECT_EQ(premise_for(rec, 2, PremisePolicy::aligned_then_joined), "dog, ball");
  EXPECT_EQ(premise_for(rec, 0, PremisePolicy::joined_only), "dog, ball");
}

TEST(Dvp, ScoringPoolsSetsAndDropsFailures) {
  auto t = std::make_shared<LambdaTransport>([](const gateway::WireRequest& w) -> json {
    const auto body = w.body();
    if (w.kind == gateway::BackendKind::visual_scorer) {
      const auto text = body["texts"][0].get<std::string>();
      if (text == "broken") return {{"score", 7.0}};
      return {{"score", text.size() / 10.0}};
    }
    const auto h = body["pairs"][0]["hypothesis"].get<std::string>();
    return {{"entailment", 0.0}, {"neutral", 0.05}, {"contradiction", 0.95}};
  });
  gateway::Channel ch{t};
  gateway::Gateway gw({ch, {}, ch, ch});
  keywords::KeywordRecord rec;
  rec.factual = {"sand", "sea"};
  rec.counterfactual_sets = {{"snow", "broken"}, {"gravel", "lake", "pond"}};
  auto cfg = DvpConfig::percentile_profile();
  cfg.n_iterations = 2;
  const auto r = score_candidates(gw, rec, testkit::mini_image("beach.png"), cfg, 2);
  ASSERT_EQ(r.candidates.size(), 4u);
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0].keyword, "broken");
  EXPECT_EQ(r.candidates[1].keyword, "gravel");
  EXPECT_EQ(r.candidates[1].iteration, 2);
  EXPECT_EQ(r.candidates[1].premise_used, "sand");
  EXPECT_EQ(r.candidates[3].premise_used, "sand, sea");
  EXPECT_DOUBLE_EQ(r.candidates[0].visual_score, 0.4);
  EXPECT_EQ(ScoringResult::from_json(r.to_json()).to_json(), r.to_json());
}

TEST(Dvp, AllCandidatesFailingRethrows) {
  auto t = std::make_shared<LambdaTransport>(
      [](const gateway::WireRequest&) -> json { throw BackendError("down"); });
  gateway::Channel ch{t};
  gateway::Gateway gw({ch, {}, ch, ch});
  keywords::KeywordRecord rec;
  rec.factual = {"a"};
  rec.counterfactual_sets = {{"b", "c"}};
  EXPECT_THROW(score_candidates(gw, rec, testkit::mini_image("beach.png"), DvpConfig{}),
               BackendError);
}

TEST(Dvp, HypothesisTemplate) {
  std::string seen;
  auto t = std::make_shared<LambdaTransport>([&](const gateway::WireRequest& w) -> json {
    if (w.kind == gateway::BackendKind::visual_scorer) return {{"score", 0.5}};
    seen = w.body()["pairs"][0]["hypothesis"];
    return {{"entailment", 0.0}, {"neutral", 0.0}, {"contradiction", 1.0}};
  });
  gateway::Channel ch{t};
  gateway::Gateway gw({ch, {}, ch, ch});
  keywords::KeywordRecord rec;
  rec.factual = {"a"};
  rec.counterfactual_sets = {{"kite"}};
  auto cfg = DvpConfig::percentile_profile();
  cfg.hypothesis_template = "There is a {keyword} in the image.";
  score_candidates(gw, rec, testkit::mini_image("beach.png"), cfg);
  EXPECT_EQ(seen, "There is a kite in the image.");
}

TEST(Dvp, IterationTrend) {
  const auto rows = iteration_trend({scored("a", 0.2, 0.9, 1), scored("b", 0.4, 0.7, 1),
                                     scored("c", 0.5, 0.5, 3)});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].iteration, 1);
  EXPECT_DOUBLE_EQ(rows[0].mean_visual, 0.3);
  EXPECT_DOUBLE_EQ(rows[0].mean_contradiction, 0.8);
  EXPECT_EQ(rows[1].iteration, 3);
  EXPECT_EQ(rows[1].count, 1u);
}
