#include <gtest/gtest.h>

#include <sstream>

#include "cfinc/error.hpp"
#include "cfinc/runner.hpp"
#include "cfinc/store.hpp"
#include "cli.hpp"
#include "settings.hpp"
#include "support.hpp"

using namespace cfinc;
using namespace cfinc::cli;
using cfinc::testkit::TempDir;
using nlohmann::json;

namespace {

gateway::EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const std::string& k) -> std::optional<std::string> {
    auto it = vars.find(k);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args, gateway::EnvLookup env = env_of({})) {
  std::ostringstream out, err;
  Context ctx;
  ctx.env = std::move(env);
  const int code = run(args, out, err, ctx);
  return {code, out.str(), err.str()};
}

std::string mock_dir() { return (testkit::mini_dir() / "fixtures").string(); }

std::vector<std::string> with_mock(std::vector<std::string> args) {
  args.insert(args.begin(), {"--mock", mock_dir(), "--set", "model.subject=mini-lvlm", "--set",
                             "model.judge=mini-judge"});
  return args;
}

}  // namespace

TEST(Settings, Precedence) {
  TempDir dir;
  testkit::write_file(dir / "c.conf", "# comment\ndvp.tau = 0.7\nrun.parallelism = 3\nmodel.subject=m1\n");
  const auto s = Settings::resolve(dir / "c.conf", env_of({{"CFINC_DVP_TAU", "0.75"}, {"CFINC_MODEL_JUDGE", "j"}}),
                                   {{"run.parallelism", "2"}});
  EXPECT_EQ(s.get("model.subject"), "m1");
  EXPECT_EQ(s.origin("model.subject"), "file");
  EXPECT_EQ(s.get_double("dvp.tau"), 0.75);
  EXPECT_EQ(s.origin("dvp.tau"), "env");
  EXPECT_EQ(s.get_int("run.parallelism"), 2);
  EXPECT_EQ(s.origin("run.parallelism"), "flag");
  EXPECT_EQ(s.get("model.judge"), "j");
  EXPECT_EQ(s.origin("dvp.k"), "default");
  EXPECT_EQ(env_name("chat.endpoint"), "CFINC_CHAT_ENDPOINT");
}

TEST(Settings, RejectsUnknownAndSecretKeys) {
  EXPECT_THROW(parse_config_text("dvp.tua = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("no equals sign\n"), ConfigError);
  try {
    parse_config_text("chat.api_key = sk-123\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("environment"), std::string::npos);
  }
  EXPECT_THROW(Settings::resolve(std::nullopt, env_of({}), {{"bogus", "1"}}), ConfigError);
}

TEST(Settings, DvpProfiles) {
  const auto pct = Settings::resolve(std::nullopt, env_of({}), {}).dvp();
  EXPECT_EQ(pct.to_json(), dvp::DvpConfig::percentile_profile().to_json());
  const auto app = Settings::resolve(std::nullopt, env_of({}), {{"dvp.profile", "band"}}).dvp();
  EXPECT_EQ(app.to_json(), dvp::DvpConfig::band_profile().to_json());
  const auto tweaked =
      Settings::resolve(std::nullopt, env_of({}), {{"dvp.profile", "band"}, {"dvp.tau", "0.85"}}).dvp();
  EXPECT_EQ(tweaked.visual_mode, dvp::VisualMode::absolute);
  EXPECT_DOUBLE_EQ(tweaked.tau, 0.85);
}

TEST(Settings, BackendAndRunConfig) {
  const auto s = Settings::resolve(std::nullopt, env_of({}),
                                   {{"chat.timeout_ms", "1500"}, {"keywords.seed", "9"}});
  const auto chat = s.backend("chat", gateway::BackendKind::chat);
  EXPECT_EQ(chat.timeout.count(), 1500);
  EXPECT_EQ(chat.auth_env_var, "OPENAI_API_KEY");
  EXPECT_EQ(s.backend("clip", gateway::BackendKind::visual_scorer).model_id,
            "clip-vit-large-patch14-336");
  EXPECT_EQ(s.keygen().seed, 9);
  EXPECT_EQ(s.keygen().model_id, "gpt-4o");
  const auto rc = s.run_config();
  EXPECT_FALSE(rc.judge);
  EXPECT_EQ(rc.parallelism, 4);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(invoke({"eval", "x.jsonl"}).code, kExitUsage);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
  EXPECT_EQ(invoke({"--version"}).code, kExitOk);
  const auto r = invoke({"--set", "nonsense=1", "report", "/nonexistent"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("unknown key"), std::string::npos);
}

TEST(Cli, DryRunPrintsPlanWithoutWriting) {
  TempDir dir;
  const auto r = invoke(with_mock({"--dry-run", "eval", (testkit::mini_dir() / "pope.jsonl").string(),
                                "--kind", "pope", "--out", (dir / "run").string()}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["planned_calls"]["keyword_calls"], 5);
  EXPECT_EQ(j["planned_calls"]["inference_calls"], 20);
  EXPECT_EQ(j["settings"]["chat.mode"]["value"], "mock");
  EXPECT_FALSE(std::filesystem::exists(dir / "run"));
}

TEST(Cli, EvalAndReport) {
  TempDir dir;
  const auto out = (dir / "run").string();
  const auto r = invoke(with_mock({"eval", (testkit::mini_dir() / "pope.jsonl").string(), "--kind",
                                "pope", "--conditions", "baseline,inception", "--out", out}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("status: completed"), std::string::npos);
  const auto rep = invoke({"report", out, "--compare"});
  EXPECT_EQ(rep.code, kExitOk);
  EXPECT_TRUE(rep.out.starts_with("scope\tcondition\tn\t"));
  EXPECT_EQ(rep.out, testkit::slurp(dir / "run" / "report.tsv"));
  EXPECT_EQ(invoke({"report", (dir / "missing").string()}).code, kExitFatal);
}

TEST(Cli, KeywordsVerifyTrend) {
  TempDir dir;
  const auto out = (dir / "kw").string();
  const auto k = invoke(with_mock({"keywords", (testkit::mini_dir() / "images").string(), "--out", out}));
  ASSERT_EQ(k.code, kExitOk) << k.err;
  EXPECT_EQ(store::read_all(dir / "kw" / "keywords.jsonl").size(), 5u);
  const auto manifest = json::parse(testkit::slurp(dir / "kw" / "manifest.json"));
  EXPECT_EQ(manifest["profile"], "percentile");

  const auto v = invoke(with_mock({"verify", out}));
  ASSERT_EQ(v.code, kExitOk) << v.err;
  EXPECT_EQ(store::read_all(dir / "kw" / "optimal.jsonl").size(), 5u);
  EXPECT_NE(v.out.find("kitchen.png\t"), std::string::npos);

  const auto plot = (dir / "trend.svg").string();
  const auto t = invoke({"trend", out, "--plot", plot});
  ASSERT_EQ(t.code, kExitOk) << t.err;
  EXPECT_NE(t.out.find("*\t1\t"), std::string::npos);
  EXPECT_NE(t.out.find("*\t5\t"), std::string::npos);
  EXPECT_NE(testkit::slurp(plot).find("<svg"), std::string::npos);

  // Stored keywords drive a single inference call.
  const auto i = invoke(with_mock({"infer", "--image", testkit::mini_image("kitchen.png"), "--question",
                                "Is there a refrigerator in the image?", "--keywords", out,
                                "--max-tokens", "64"}));
  EXPECT_EQ(i.code, kExitOk) << i.err;
  EXPECT_NE(i.out.find("# keywords: "), std::string::npos);
}

TEST(Cli, KeywordsSkipsUnreadableImages) {
  TempDir dir;
  std::filesystem::create_directories(dir / "imgs");
  std::filesystem::copy_file(testkit::mini_image("beach.png"), dir / "imgs" / "beach.png");
  testkit::write_file(dir / "imgs" / "notes.txt", "not an image");
  const auto r = invoke(with_mock({"keywords", (dir / "imgs").string(), "--out", (dir / "kw").string()}));
  EXPECT_EQ(r.code, kExitPartial);
  EXPECT_NE(r.err.find("notes.txt"), std::string::npos);
  EXPECT_EQ(store::read_all(dir / "kw" / "keywords.jsonl").size(), 1u);
}

TEST(Cli, LiveChatWithoutTokenFails) {
  TempDir dir;
  const auto r = invoke({"--set", "chat.endpoint=http://127.0.0.1:9/v1/chat/completions", "infer",
                      "--image", testkit::mini_image("beach.png"), "--question", "Is it sunny?",
                      "--baseline"});
  EXPECT_EQ(r.code, kExitFatal);
  EXPECT_NE(r.err.find("OPENAI_API_KEY"), std::string::npos);
}
