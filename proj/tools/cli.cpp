#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "cfinc/error.hpp"
#include "cfinc/inception.hpp"
#include "cfinc/store.hpp"
#include "cfinc/util.hpp"
#include "settings.hpp"

namespace cfinc::cli {
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::string mock_dir;
  bool dry_run = false;
  std::string run_id;
  int parallelism = 0;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

Settings resolve_settings(const Common& common, const Context& ctx,
                          std::map<std::string, std::string> flags) {
  for (const auto& s : common.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    flags[std::string(util::trim(s.substr(0, eq)))] = std::string(util::trim(s.substr(eq + 1)));
  }
  if (!common.mock_dir.empty()) {
    const fs::path dir(common.mock_dir);
    for (const char* b : {"chat", "clip", "nli"}) {
      flags[std::string(b) + ".mode"] = "mock";
      flags[std::string(b) + ".fixture"] = (dir / (std::string(b) + ".jsonl")).string();
    }
  }
  if (!common.run_id.empty()) flags["run.id"] = common.run_id;
  if (common.parallelism > 0) flags["run.parallelism"] = std::to_string(common.parallelism);
  std::optional<fs::path> file;
  if (!common.config_file.empty()) file = common.config_file;
  return Settings::resolve(file, ctx.env ? ctx.env : gateway::process_env(), flags);
}

gateway::Channel make_channel(const gateway::BackendConfig& bc, const Context& ctx) {
  bc.validate();
  if (ctx.hooks.make_transport) {
    gateway::Channel c;
    c.transport = ctx.hooks.make_transport(bc);
    c.max_retries = bc.max_retries;
    c.initial_backoff = bc.initial_backoff;
    c.supports_seed = bc.supports_seed;
    c.model_id = bc.model_id;
    return c;
  }
  return gateway::Channel::from_config(bc, ctx.env ? ctx.env : gateway::process_env());
}

class NotConfigured : public gateway::Transport {
 public:
  json send(const gateway::WireRequest&) override {
    throw BackendError("backend not used by this command");
  }
};

gateway::Channel unused_channel() {
  gateway::Channel c;
  c.transport = std::make_shared<NotConfigured>();
  return c;
}

std::unique_ptr<gateway::Gateway> make_gateway(const Settings& s, const Context& ctx, bool chat,
                                               bool scorers,
                                               std::optional<fs::path> cache_path) {
  gateway::Channels channels{
      chat ? make_channel(s.backend("chat", gateway::BackendKind::chat), ctx) : unused_channel(),
      std::nullopt,
      scorers ? make_channel(s.backend("clip", gateway::BackendKind::visual_scorer), ctx)
              : unused_channel(),
      scorers ? make_channel(s.backend("nli", gateway::BackendKind::nli_scorer), ctx)
              : unused_channel()};
  gateway::GatewayOptions opts;
  opts.max_in_flight = s.get_int("run.parallelism");
  opts.cache_path = std::move(cache_path);
  opts.sleep = ctx.hooks.sleep;
  return std::make_unique<gateway::Gateway>(std::move(channels), opts);
}

void print_dry_run(std::ostream& out, const std::string& command, const Settings& s, json extra) {
  json j = {{"command", command}, {"dry_run", true}, {"settings", s.to_json()}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  out << j.dump(2) << "\n";
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw IOFailure("cannot write " + path.string());
}

std::vector<fs::path> list_files(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw ConfigError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename().string().front() != '.') out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// --- keywords ---------------------------------------------------------------------

struct KeywordsArgs {
  std::string image_dir;
  std::string out;
  int iterations = 0;
  std::string profile;
};

int cmd_keywords(const KeywordsArgs& a, const Common& common, const Context& ctx,
                 std::ostream& out, std::ostream& err) {
  std::map<std::string, std::string> flags;
  if (a.iterations > 0) flags["keywords.iterations"] = std::to_string(a.iterations);
  if (!a.profile.empty()) flags["dvp.profile"] = a.profile;
  const auto s = resolve_settings(common, ctx, flags);
  const auto kwopts = s.keygen();
  const auto dvp_cfg = s.dvp();
  const auto run_id = s.get("run.id");
  const fs::path out_dir(a.out);
  const auto images = list_files(a.image_dir);
  s.backend("chat", gateway::BackendKind::chat).validate();

  std::set<std::string> done;
  std::error_code ec;
  if (fs::exists(out_dir / runner::kKeywordsFile, ec)) {
    for (const auto& r : store::read_all(out_dir / runner::kKeywordsFile, "keywords")) {
      if (r.run_id == run_id) done.insert(r.sample_id);
    }
  }
  std::size_t pending = 0;
  for (const auto& p : images) pending += done.contains(p.filename().string()) ? 0 : 1;

  if (common.dry_run) {
    print_dry_run(out, "keywords", s,
                  {{"images", images.size()},
                   {"dvp", dvp_cfg.to_json()},
                   {"planned_calls", {{"chat", pending}, {"clip_score", 0}, {"nli", 0}}}});
    return kExitOk;
  }

  fs::create_directories(out_dir);
  auto gw = make_gateway(s, ctx, true, false, out_dir / runner::kCacheFile);
  store::RecordStore records(out_dir / runner::kKeywordsFile);
  json skipped = json::array();
  std::size_t written = 0;
  for (const auto& path : images) {
    const auto key = path.filename().string();
    if (records.find("keywords", run_id, key)) continue;
    try {
      gw->image(path.string());
      auto rec = keywords::generate_keywords(*gw, path.string(), kwopts);
      records.append(store::RecordEnvelope::make("keywords", run_id, key, "", rec.to_json()));
      ++written;
    } catch (const AuthError&) {
      throw;
    } catch (const Error& e) {
      err << "warning: skipping " << path.string() << ": " << e.what() << "\n";
      skipped.push_back({{"image", key}, {"error", e.what()}});
    }
  }
  write_json(out_dir / runner::kManifestFile,
             {{"command", "keywords"},
              {"run_id", run_id},
              {"image_dir", a.image_dir},
              {"profile", s.get("dvp.profile")},
              {"dvp", dvp_cfg.to_json()},
              {"keygen",
               {{"model_id", kwopts.model_id},
                {"n_iterations", kwopts.n_iterations},
                {"temperature", kwopts.temperature},
                {"mode", s.get("keywords.mode")}}},
              {"images", images.size()},
              {"written", written},
              {"skipped", skipped}});
  out << "keywords: " << written << " written, " << records.size() << " total, " << skipped.size()
      << " skipped\n";
  return skipped.empty() ? kExitOk : kExitPartial;
}

// --- verify -----------------------------------------------------------------------

int cmd_verify(const std::string& dir_arg, const std::string& profile, const Common& common,
               const Context& ctx, std::ostream& out, std::ostream& err) {
  std::map<std::string, std::string> flags;
  if (!profile.empty()) flags["dvp.profile"] = profile;
  const auto s = resolve_settings(common, ctx, flags);
  const auto dvp_cfg = s.dvp();
  const auto run_id = s.get("run.id");
  const fs::path dir(dir_arg);
  std::error_code ec;
  if (!fs::exists(dir / runner::kKeywordsFile, ec)) {
    throw IncompleteRun("no keyword records in " + dir.string());
  }
  const auto kw = store::read_all(dir / runner::kKeywordsFile, "keywords");
  std::set<std::string> scored;
  if (fs::exists(dir / runner::kCandidatesFile, ec)) {
    for (const auto& r : store::read_all(dir / runner::kCandidatesFile, "candidates")) {
      if (r.run_id == run_id) scored.insert(r.sample_id);
    }
  }
  std::size_t planned = 0;
  for (const auto& r : kw) {
    if (r.run_id != run_id || scored.contains(r.sample_id)) continue;
    for (const auto& set : r.payload.at("counterfactual_sets")) planned += set.size();
  }
  if (common.dry_run) {
    print_dry_run(out, "verify", s,
                  {{"dvp", dvp_cfg.to_json()},
                   {"planned_calls", {{"chat", 0}, {"clip_score", planned}, {"nli", planned}}}});
    return kExitOk;
  }

  auto gw = make_gateway(s, ctx, false, true, dir / runner::kCacheFile);
  store::RecordStore candidates(dir / runner::kCandidatesFile);
  store::RecordStore optimal(dir / runner::kOptimalFile);
  std::size_t failed = 0, fallback = 0;
  for (const auto& r : kw) {
    if (r.run_id != run_id) continue;
    const auto rec = keywords::KeywordRecord::from_json(r.payload);
    try {
      dvp::ScoringResult result;
      if (auto existing = candidates.find("candidates", run_id, r.sample_id)) {
        result = dvp::ScoringResult::from_json(existing->payload);
      } else {
        result = dvp::score_candidates(*gw, rec, rec.image_ref, dvp_cfg, s.get_int("run.parallelism"));
        candidates.append(
            store::RecordEnvelope::make("candidates", run_id, r.sample_id, "", result.to_json()));
      }
      if (!optimal.find("optimal", run_id, r.sample_id, "inception")) {
        const auto opt = dvp::select_from_scored(result.candidates, dvp_cfg);
        fallback += opt.fallback_used ? 1 : 0;
        optimal.append(store::RecordEnvelope::make("optimal", run_id, r.sample_id, "inception",
                                                   {{"optimal", opt.to_json()},
                                                    {"extra", json::object()}}));
        out << r.sample_id << "\t" << (opt.fallback_used ? "(none)" : util::join(opt.keywords, ", "))
            << "\n";
      }
    } catch (const AuthError&) {
      throw;
    } catch (const Error& e) {
      err << "warning: " << r.sample_id << ": " << e.what() << "\n";
      ++failed;
    }
  }
  if (fallback > 0) err << "note: " << fallback << " image(s) kept no keywords\n";
  return failed == 0 ? kExitOk : kExitPartial;
}

// --- infer ------------------------------------------------------------------------

struct InferArgs {
  std::string image;
  std::string question;
  std::string keywords_dir;
  bool baseline = false;
  int max_tokens = 0;
};

int cmd_infer(const InferArgs& a, const Common& common, const Context& ctx, std::ostream& out) {
  const auto s = resolve_settings(common, ctx, {});
  inception::InferenceOptions iopts;
  iopts.model_id = s.get("model.subject");
  iopts.max_tokens = a.max_tokens > 0 ? a.max_tokens
                                      : (s.get_int("infer.max_tokens") > 0 ? s.get_int("infer.max_tokens") : 512);
  const auto run_id = s.get("run.id");
  const bool full_pipeline = !a.baseline && a.keywords_dir.empty();

  std::optional<dvp::OptimalKeywords> stored;
  if (!a.baseline && !a.keywords_dir.empty()) {
    const auto key = fs::path(a.image).filename().string();
    const auto path = fs::path(a.keywords_dir) / runner::kOptimalFile;
    std::error_code ec;
    if (!fs::exists(path, ec)) throw IncompleteRun("no verified keywords in " + a.keywords_dir);
    for (const auto& r : store::read_all(path, "optimal")) {
      if (r.run_id == run_id && r.sample_id == key && r.condition == "inception") {
        stored = dvp::OptimalKeywords::from_json(r.payload.at("optimal"));
      }
    }
    if (!stored) throw IncompleteRun("no verified keywords for " + key);
  }

  if (common.dry_run) {
    print_dry_run(out, "infer", s,
                  {{"mode", a.baseline ? "baseline" : (full_pipeline ? "pipeline" : "stored keywords")},
                   {"planned_calls",
                    {{"chat", full_pipeline ? 2 : 1},
                     {"clip_score", full_pipeline ? "one per counterfactual keyword" : "0"},
                     {"nli", full_pipeline ? "one per counterfactual keyword" : "0"}}}});
    return kExitOk;
  }

  auto gw = make_gateway(s, ctx, true, full_pipeline, std::nullopt);
  gateway::ChatResponse reply;
  if (a.baseline) {
    reply = inception::infer_baseline(*gw, a.image, a.question, iopts);
  } else {
    dvp::OptimalKeywords opt;
    if (stored) {
      opt = *stored;
    } else {
      const auto rec = keywords::generate_keywords(*gw, a.image, s.keygen());
      opt = dvp::select_optimal(*gw, rec, a.image, s.dvp(), s.get_int("run.parallelism"));
    }
    if (!opt.fallback_used) out << "# keywords: " << util::join(opt.keywords, ", ") << "\n";
    reply = inception::infer(*gw, a.image, a.question, opt, iopts);
  }
  out << reply.text << "\n";
  return kExitOk;
}

// --- eval -------------------------------------------------------------------------

struct EvalArgs {
  std::string dataset;
  std::string kind;
  std::string conditions = "baseline,inception";
  std::string out;
  std::string profile;
  std::string mmvp_mode;
};

int cmd_eval(const EvalArgs& a, const Common& common, const Context& ctx, std::ostream& out) {
  std::map<std::string, std::string> flags;
  if (!a.profile.empty()) flags["dvp.profile"] = a.profile;
  if (!a.mmvp_mode.empty()) flags["bench.mmvp_mode"] = a.mmvp_mode;
  const auto s = resolve_settings(common, ctx, flags);
  auto config = s.run_config();
  config.benchmark = bench::parse_benchmark_kind(a.kind);
  config.dataset_path = a.dataset;
  config.run_dir = a.out;
  std::string rest = a.conditions;
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    const auto comma = rest.find(',', pos);
    const auto item = util::trim(std::string_view(rest).substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (!item.empty()) config.conditions.push_back(runner::ConditionSpec::parse(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }

  if (common.dry_run) {
    const auto planned = runner::plan(config);
    print_dry_run(out, "eval", s, {{"run_config", config.to_json()}, {"planned_calls", planned.to_json()}});
    return kExitOk;
  }

  const auto manifest = runner::execute(config, ctx.hooks);
  std::ifstream summary(fs::path(a.out) / runner::kSummaryFile);
  if (summary) out << summary.rdbuf();
  out << "status: " << manifest.status << " (" << manifest.samples_failed << " failed samples, "
      << manifest.transport_calls << " backend calls, " << manifest.backend.cache_hits
      << " cache hits)\n";
  if (manifest.status == "failed") return kExitFatal;
  return manifest.samples_failed == 0 ? kExitOk : kExitPartial;
}

// --- trend ------------------------------------------------------------------------

std::string render_svg(const std::vector<dvp::TrendRow>& rows) {
  const double w = 480, h = 300, pad = 40;
  int max_it = 1;
  for (const auto& r : rows) max_it = std::max(max_it, r.iteration);
  auto x = [&](int it) { return pad + (w - 2 * pad) * (max_it == 1 ? 0.5 : (it - 1.0) / (max_it - 1.0)); };
  auto y = [&](double v) { return h - pad - (h - 2 * pad) * std::clamp(v, 0.0, 1.0); };
  auto line = [&](auto value, const char* color) {
    std::string pts;
    for (const auto& r : rows) {
      pts += util::format_fixed(x(r.iteration), 1) + "," + util::format_fixed(y(value(r)), 1) + " ";
    }
    return "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
  };
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"300\">\n";
  svg += "<rect width=\"480\" height=\"300\" fill=\"white\"/>\n";
  svg += "<line x1=\"40\" y1=\"260\" x2=\"440\" y2=\"260\" stroke=\"black\"/>\n";
  svg += "<line x1=\"40\" y1=\"40\" x2=\"40\" y2=\"260\" stroke=\"black\"/>\n";
  svg += line([](const dvp::TrendRow& r) { return r.mean_visual; }, "#1f77b4");
  svg += line([](const dvp::TrendRow& r) { return r.mean_contradiction; }, "#d62728");
  for (const auto& r : rows) {
    svg += "<text x=\"" + util::format_fixed(x(r.iteration), 1) + "\" y=\"280\" font-size=\"12\" text-anchor=\"middle\">" +
           std::to_string(r.iteration) + "</text>\n";
  }
  svg += "<text x=\"300\" y=\"24\" font-size=\"12\" fill=\"#1f77b4\">mean visual score</text>\n";
  svg += "<text x=\"300\" y=\"38\" font-size=\"12\" fill=\"#d62728\">mean contradiction</text>\n";
  svg += "</svg>\n";
  return svg;
}

int cmd_trend(const std::string& dir_arg, const std::string& plot, const Common& common,
              const Context& ctx, std::ostream& out) {
  const auto s = resolve_settings(common, ctx, {});
  if (common.dry_run) {
    print_dry_run(out, "trend", s, {{"planned_calls", {{"chat", 0}, {"clip_score", 0}, {"nli", 0}}}});
    return kExitOk;
  }
  const fs::path path = fs::path(dir_arg) / runner::kCandidatesFile;
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IncompleteRun("no scored candidates in " + dir_arg);
  const bool filter = !common.run_id.empty();

  std::map<std::string, std::vector<dvp::TrendRow>> per_image;
  for (const auto& r : store::read_all(path, "candidates")) {
    if (filter && r.run_id != common.run_id) continue;
    const auto scored = dvp::ScoringResult::from_json(r.payload);
    auto rows = dvp::iteration_trend(scored.candidates);
    if (!rows.empty()) per_image[r.sample_id] = std::move(rows);
  }
  if (per_image.empty()) throw IncompleteRun("no scored candidates in " + dir_arg);

  // Aggregate: unweighted mean of the per-image rows at each iteration.
  std::map<int, dvp::TrendRow> agg;
  std::map<int, std::size_t> images_at;
  out << "image\titeration\tmean_visual\tmean_contradiction\tcount\n";
  for (const auto& [image, rows] : per_image) {
    for (const auto& r : rows) {
      out << image << "\t" << r.iteration << "\t" << util::format_fixed(r.mean_visual, 4) << "\t"
          << util::format_fixed(r.mean_contradiction, 4) << "\t" << r.count << "\n";
      auto& a = agg[r.iteration];
      a.iteration = r.iteration;
      a.mean_visual += r.mean_visual;
      a.mean_contradiction += r.mean_contradiction;
      a.count += r.count;
      ++images_at[r.iteration];
    }
  }
  std::vector<dvp::TrendRow> aggregate;
  for (auto& [it, a] : agg) {
    a.mean_visual /= static_cast<double>(images_at[it]);
    a.mean_contradiction /= static_cast<double>(images_at[it]);
    out << "*\t" << it << "\t" << util::format_fixed(a.mean_visual, 4) << "\t"
        << util::format_fixed(a.mean_contradiction, 4) << "\t" << a.count << "\n";
    aggregate.push_back(a);
  }
  if (!plot.empty()) {
    std::ofstream svg(plot, std::ios::trunc);
    svg << render_svg(aggregate);
    if (!svg) throw IOFailure("cannot write " + plot);
  }
  return kExitOk;
}

// --- report -----------------------------------------------------------------------

int cmd_report(const std::string& dir, bool compare, const Common& common, const Context& ctx,
               std::ostream& out) {
  const auto s = resolve_settings(common, ctx, {});
  if (common.dry_run) {
    print_dry_run(out, "report", s, {{"planned_calls", {{"chat", 0}, {"clip_score", 0}, {"nli", 0}}}});
    return kExitOk;
  }
  const auto report = compare ? runner::compare_conditions(dir) : runner::build_report(dir);
  runner::write_report(dir);
  out << report.tsv;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Context& context) {
  CLI::App app{"cfinc: counterfactual keyword prompting for vision-language models", "cfinc"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "cfinc 0.1.0");

  Common common;
  app.add_option("--config", common.config_file, "key = value configuration file");
  app.add_option("--set", common.sets, "override one setting, key=value (repeatable)");
  app.add_option("--mock", common.mock_dir, "replay fixtures from DIR/{chat,clip,nli}.jsonl");
  app.add_flag("--dry-run", common.dry_run, "print the resolved config and planned calls, then exit");
  app.add_option("--run-id", common.run_id, "run identifier");
  app.add_option("--parallelism", common.parallelism, "concurrent samples and backend calls")
      ->check(CLI::PositiveNumber);

  KeywordsArgs kw;
  auto* keywords_cmd = app.add_subcommand("keywords", "generate factual and counterfactual keywords");
  keywords_cmd->add_option("image_dir", kw.image_dir, "directory of images")->required();
  keywords_cmd->add_option("--out", kw.out, "output directory")->required();
  keywords_cmd->add_option("--iterations", kw.iterations, "counterfactual sets per image")
      ->check(CLI::PositiveNumber);
  keywords_cmd->add_option("--profile", kw.profile, "verification preset")
      ->check(CLI::IsMember({"percentile", "band"}));

  std::string verify_dir, verify_profile;
  auto* verify_cmd = app.add_subcommand("verify", "score and filter keywords written by 'keywords'");
  verify_cmd->add_option("dir", verify_dir, "directory holding keywords.jsonl")->required();
  verify_cmd->add_option("--profile", verify_profile, "verification preset")
      ->check(CLI::IsMember({"percentile", "band"}));

  InferArgs inf;
  auto* infer_cmd = app.add_subcommand("infer", "answer one question about one image");
  infer_cmd->add_option("--image", inf.image, "image file")->required();
  infer_cmd->add_option("--question", inf.question, "question text")->required();
  infer_cmd->add_option("--keywords", inf.keywords_dir, "directory with verified keywords");
  infer_cmd->add_flag("--baseline", inf.baseline, "ask without keywords");
  infer_cmd->add_option("--max-tokens", inf.max_tokens, "answer budget")->check(CLI::PositiveNumber);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "run a benchmark under one or more conditions");
  eval_cmd->add_option("dataset", ev.dataset, "benchmark file")->required();
  eval_cmd->add_option("--kind", ev.kind, "pope_adversarial, mmvp, llava_wild or mmhal")->required();
  eval_cmd->add_option("--conditions", ev.conditions,
                       "comma list of baseline, inception, vv_only, lv_only, "
                       "mixed_factual:<fraction>[:<seed>]");
  eval_cmd->add_option("--out", ev.out, "run directory")->required();
  eval_cmd->add_option("--profile", ev.profile, "verification preset")
      ->check(CLI::IsMember({"percentile", "band"}));
  eval_cmd->add_option("--mmvp-mode", ev.mmvp_mode, "per_question or per_pair")
      ->check(CLI::IsMember({"per_question", "per_pair"}));

  std::string trend_dir, trend_plot;
  auto* trend_cmd = app.add_subcommand("trend", "per-iteration visual and contradiction means");
  trend_cmd->add_option("dir", trend_dir, "run or keyword directory")->required();
  trend_cmd->add_option("--plot", trend_plot, "write an SVG plot of the aggregate");

  std::string report_dir;
  bool compare = false;
  auto* report_cmd = app.add_subcommand("report", "rebuild the report of a run");
  report_cmd->add_option("dir", report_dir, "run directory")->required();
  report_cmd->add_flag("--compare", compare, "require a completed multi-condition run");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*keywords_cmd) return cmd_keywords(kw, common, context, out, err);
    if (*verify_cmd) return cmd_verify(verify_dir, verify_profile, common, context, out, err);
    if (*infer_cmd) return cmd_infer(inf, common, context, out);
    if (*eval_cmd) return cmd_eval(ev, common, context, out);
    if (*trend_cmd) return cmd_trend(trend_dir, trend_plot, common, context, out);
    if (*report_cmd) return cmd_report(report_dir, compare, common, context, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidRequest& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitUsage;
}

}  // namespace cfinc::cli
