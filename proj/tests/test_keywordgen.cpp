#include <gtest/gtest.h>

#include <random>
#include <set>

#include "cfinc/error.hpp"
#include "cfinc/keywordgen.hpp"
#include "support.hpp"

using namespace cfinc;
using namespace cfinc::keywords;
using cfinc::testkit::LambdaTransport;

TEST(KeywordPrompt, GoldenFiles) {
  const auto dir = testkit::source_dir() / "prompts";
  EXPECT_EQ(build_simple_prompt(), testkit::slurp(dir / "keywords_simple.txt"));
  EXPECT_EQ(build_iterative_prompt(), testkit::slurp(dir / "keywords_iterative.txt"));
  EXPECT_EQ(build_iterative_prompt(5), testkit::slurp(dir / "keywords_iterative.txt"));
}

TEST(KeywordPrompt, OtherSetCounts) {
  const auto three = build_iterative_prompt(3);
  EXPECT_NE(three.find("generate three sets"), std::string::npos);
  EXPECT_NE(three.find("Counterfactual Keywords 3: [_, _, _, ...]"), std::string::npos);
  EXPECT_EQ(three.find("Counterfactual Keywords 4"), std::string::npos);
  const auto one = build_iterative_prompt(1);
  EXPECT_NE(one.find("generate one set "), std::string::npos);
  EXPECT_TRUE(one.ends_with("Counterfactual Keywords 1: [_, _, _, ...]"));
  EXPECT_THROW(build_iterative_prompt(0), std::invalid_argument);
}

TEST(KeywordParse, CanonicalReply) {
  const auto lists = parse_keyword_lists(
      "Factual Keywords: [dog, red ball, grass]\n"
      "Counterfactual Keywords 1: [cat, blue cube]\n"
      "Counterfactual Keywords 2: [wolf, orange ball]\n",
      2);
  EXPECT_EQ(lists.factual, (std::vector<std::string>{"dog", "red ball", "grass"}));
  ASSERT_EQ(lists.counterfactuals.size(), 2u);
  EXPECT_EQ(lists.counterfactuals[1], (std::vector<std::string>{"wolf", "orange ball"}));
}

TEST(KeywordParse, ToleratesProseMarkdownAndQuotes) {
  const auto lists = parse_keyword_lists(
      "Sure! Here is the analysis.\n\n"
      "**Factual Keywords:** [\"man\", 'bicycle', helmet (red)]\n"
      "Some commentary in between.\n"
      "**counterfactual keywords 1**: [woman, scooter]\n"
      "Counterfactual Keywords 2: [girl, moped]\n"
      "Counterfactual Keywords 3: [boy, tricycle]\n",
      3);
  EXPECT_EQ(lists.factual, (std::vector<std::string>{"man", "bicycle", "helmet (red)"}));
  EXPECT_EQ(lists.counterfactuals[0], (std::vector<std::string>{"woman", "scooter"}));
  EXPECT_EQ(lists.counterfactuals[2], (std::vector<std::string>{"boy", "tricycle"}));
}

TEST(KeywordParse, EchoedPromptScaffoldIsIgnored) {
  const std::string reply = build_iterative_prompt(2) +
                            "\n\nFactual Keywords: [tree]\n"
                            "Counterfactual Keywords 1: [bush]\n"
                            "Counterfactual Keywords 2: [cactus]";
  const auto lists = parse_keyword_lists(reply, 2);
  EXPECT_EQ(lists.factual, std::vector<std::string>{"tree"});
  EXPECT_EQ(lists.counterfactuals[1], std::vector<std::string>{"cactus"});
}

TEST(KeywordParse, UnbracketedAndUnnumbered) {
  const auto lists = parse_keyword_lists("Factual Keywords: sky, sea\nCounterfactual Keywords: lava", 1);
  EXPECT_EQ(lists.factual, (std::vector<std::string>{"sky", "sea"}));
  EXPECT_EQ(lists.counterfactuals[0], std::vector<std::string>{"lava"});
}

TEST(KeywordParse, ExtraSetsDropped) {
  const auto lists = parse_keyword_lists(
      "Factual Keywords: [a]\nCounterfactual Keywords 1: [b]\nCounterfactual Keywords 2: [c]", 1);
  EXPECT_EQ(lists.counterfactuals.size(), 1u);
}

TEST(KeywordParse, MissingSectionNamed) {
  try {
    parse_keyword_lists("Factual Keywords: [a]\nCounterfactual Keywords 1: [b]", 3);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.section(), "Counterfactual Keywords 2");
    EXPECT_NE(e.raw_text().find("[b]"), std::string::npos);
  }
  try {
    parse_keyword_lists("I cannot help with that.", 1);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.section(), "Factual Keywords");
  }
}

TEST(KeywordParse, SerializeIsInverse) {
  KeywordLists lists{{"a b", "c"}, {{"d"}, {}, {"e-f", "g h i"}}};
  EXPECT_EQ(parse_keyword_lists(serialize_keyword_lists(lists), 3), lists);
}

TEST(KeywordGen, RequestShape) {
  GenerationOptions opts;
  opts.model_id = "m";
  const auto req = keyword_request("img.png", opts);
  EXPECT_EQ(req.temperature, 0.8);
  EXPECT_EQ(req.messages.size(), 1u);
  EXPECT_EQ(req.messages[0].image_ref, "img.png");
  EXPECT_EQ(req.messages[0].text, build_iterative_prompt(5));
  opts.mode = PromptMode::simple;
  EXPECT_THROW(keyword_request("img.png", opts), std::invalid_argument);
  opts.n_iterations = 1;
  EXPECT_EQ(keyword_request("img.png", opts).messages[0].text, build_simple_prompt());
}

TEST(KeywordGen, GenerateThroughGateway) {
  auto t = std::make_shared<LambdaTransport>([](const gateway::WireRequest&) {
    return testkit::chat_text(
        "Factual Keywords: [sand, sea]\nCounterfactual Keywords 1: [snow]\n"
        "Counterfactual Keywords 2: [lake]");
  });
  gateway::Channel ch{t};
  gateway::Gateway gw({ch, {}, ch, ch});
  GenerationOptions opts;
  opts.model_id = "m";
  opts.n_iterations = 2;
  const auto rec = generate_keywords(gw, testkit::mini_image("beach.png"), opts);
  EXPECT_EQ(rec.factual, (std::vector<std::string>{"sand", "sea"}));
  EXPECT_EQ(rec.counterfactual_sets.size(), 2u);
  EXPECT_EQ(KeywordRecord::from_json(rec.to_json()).to_json(), rec.to_json());

  opts.n_iterations = 3;
  EXPECT_THROW(generate_keywords(gw, testkit::mini_image("beach.png"), opts), ParseError);
}

TEST(KeywordGen, EmptyFactualListRejected) {
  auto t = std::make_shared<LambdaTransport>([](const gateway::WireRequest&) {
    return testkit::chat_text("Factual Keywords: []\nCounterfactual Keywords 1: [x]");
  });
  gateway::Channel ch{t};
  gateway::Gateway gw({ch, {}, ch, ch});
  GenerationOptions opts;
  opts.model_id = "m";
  opts.n_iterations = 1;
  EXPECT_THROW(generate_keywords(gw, testkit::mini_image("beach.png"), opts), ParseError);
}

TEST(KeywordMix, CountsAndDeterminism) {
  const std::vector<std::string> factual{"f1", "f2", "f3"};
  const std::vector<std::string> cf{"c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8"};
  for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto a = mix_keywords(factual, cf, frac, 42);
    const auto b = mix_keywords(factual, cf, frac, 42);
    EXPECT_EQ(a.keywords, b.keywords);
    EXPECT_EQ(a.keywords.size(), cf.size());
    EXPECT_EQ(a.factual_count(), static_cast<std::size_t>(frac * 8));
    std::multiset<std::string> cf_used;
    for (std::size_t i = 0; i < a.keywords.size(); ++i) {
      const auto& pool = a.from_factual[i] ? factual : cf;
      EXPECT_NE(std::find(pool.begin(), pool.end(), a.keywords[i]), pool.end());
      if (!a.from_factual[i]) cf_used.insert(a.keywords[i]);
    }
    for (const auto& k : cf_used) EXPECT_EQ(cf_used.count(k), 1u);
  }
  EXPECT_NE(mix_keywords(factual, cf, 0.5, 1).keywords, mix_keywords(factual, cf, 0.5, 2).keywords);
}

TEST(KeywordMix, RoundingAndPools) {
  EXPECT_EQ(round_half_up(2.5), 3u);
  EXPECT_EQ(round_half_up(2.49), 2u);
  const std::vector<std::string> cf{"a", "b", "c", "d", "e"};
  EXPECT_EQ(mix_keywords({"x"}, cf, 0.5, 0).factual_count(), 3u);
  EXPECT_EQ(mix_keywords({"x"}, cf, 0.5, 0).keywords.size(), 5u);
  EXPECT_THROW(mix_keywords({}, cf, 0.5, 0), EmptyPool);
  EXPECT_NO_THROW(mix_keywords({}, cf, 0.0, 0));
  EXPECT_THROW(mix_keywords({"x"}, {}, 0.5, 0), EmptyPool);
  EXPECT_THROW(mix_keywords({"x"}, cf, 1.5, 0), std::invalid_argument);
}
