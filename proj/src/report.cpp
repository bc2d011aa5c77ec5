#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cfinc/error.hpp"
#include "cfinc/runner.hpp"
#include "cfinc/store.hpp"
#include "cfinc/util.hpp"

namespace cfinc::runner {
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Column {
  std::string name;
  bool integer = false;  // counts are printed as integers and get no delta
};

struct Row {
  std::string scope;
  std::string condition;
  std::vector<double> values;
};

struct Table {
  std::vector<Column> columns;
  std::vector<Row> rows;
};

struct Scope {
  std::string name;
  std::set<std::string> sample_ids;
};

std::map<std::string, json> records_by(const fs::path& file, std::string_view kind,
                                       const std::string& run_id, const std::string& condition_filter,
                                       bool keyed_by_condition) {
  std::map<std::string, json> out;
  std::error_code ec;
  if (!fs::exists(file, ec)) return out;
  for (const auto& r : store::read_all(file, kind)) {
    if (r.run_id != run_id) continue;
    if (keyed_by_condition && r.condition != condition_filter) continue;
    out[r.sample_id] = r.payload;
  }
  return out;
}

std::vector<double> binary_values(const bench::BinaryMetrics& m) {
  return {static_cast<double>(m.total), static_cast<double>(m.unparseable), m.accuracy,
          m.precision, m.recall, m.f1, m.yes_ratio};
}

// MMVP pairs only count when both questions are in the set.
std::vector<bench::PredictionRecord> complete_pairs(
    const std::vector<bench::PredictionRecord>& preds,
    const std::map<std::string, const bench::BenchmarkSample*>& by_id) {
  std::map<std::string, int> per_pair;
  for (const auto& p : preds) {
    const auto& md = by_id.at(p.sample_id)->metadata;
    if (auto it = md.find("pair_id"); it != md.end()) ++per_pair[it->second];
  }
  std::vector<bench::PredictionRecord> out;
  for (const auto& p : preds) {
    const auto& md = by_id.at(p.sample_id)->metadata;
    const auto it = md.find("pair_id");
    if (it != md.end() && per_pair[it->second] == 2) out.push_back(p);
  }
  return out;
}

std::string format_value(double v, bool integer) {
  if (std::isnan(v)) return "-";
  if (integer) return std::to_string(static_cast<long long>(std::llround(v)));
  return util::format_fixed(v, 4);
}

}  // namespace

Report build_report(const fs::path& run_dir) {
  const auto manifest = load_manifest(run_dir);
  const auto config = RunConfig::from_json(manifest.config);
  const auto samples = bench::load_benchmark(config.dataset_path, config.benchmark, config.load);
  const auto& run_id = config.run_id;

  std::map<std::string, const bench::BenchmarkSample*> by_id;
  for (const auto& s : samples) by_id[s.sample_id] = &s;

  // Scopes: everything, per category or pattern, then information level.
  std::vector<Scope> scopes;
  {
    Scope all{"all", {}};
    std::map<std::string, std::set<std::string>> groups;
    for (const auto& s : samples) {
      all.sample_ids.insert(s.sample_id);
      if (config.benchmark == bench::BenchmarkKind::mmvp) {
        groups["pattern=" + s.metadata.at("pattern")].insert(s.sample_id);
      } else if (!bench::is_discriminative(config.benchmark)) {
        groups["category=" + s.metadata.at("category")].insert(s.sample_id);
      }
    }
    scopes.push_back(std::move(all));
    for (auto& [name, ids] : groups) scopes.push_back({name, std::move(ids)});

    const auto kw = records_by(run_dir / kKeywordsFile, "keywords", run_id, "", false);
    if (!kw.empty()) {
      std::vector<keywords::KeywordRecord> recs;
      for (const auto& [key, payload] : kw) {
        auto r = keywords::KeywordRecord::from_json(payload);
        r.image_ref = key;
        recs.push_back(std::move(r));
      }
      const auto split = bench::split_by_information_level(recs);
      const std::set<std::string> low(split.low.begin(), split.low.end());
      const std::set<std::string> high(split.high.begin(), split.high.end());
      Scope lo{"info=low", {}}, hi{"info=high", {}};
      for (const auto& s : samples) {
        const auto key = image_key(config.dataset_path, s.image_ref);
        if (low.contains(key)) lo.sample_ids.insert(s.sample_id);
        if (high.contains(key)) hi.sample_ids.insert(s.sample_id);
      }
      for (auto* sc : {&lo, &hi}) {
        if (!sc->sample_ids.empty()) scopes.push_back(std::move(*sc));
      }
    }
  }

  Table table;
  switch (config.benchmark) {
    case bench::BenchmarkKind::pope_adversarial:
      table.columns = {{"n", true},        {"unparseable", true}, {"accuracy"}, {"precision"},
                       {"recall"},         {"f1"},                {"yes_ratio"}};
      break;
    case bench::BenchmarkKind::mmvp:
      table.columns = {{"n", true},
                       {"unparseable", true},
                       {config.mmvp_mode == bench::MmvpMode::per_pair ? "accuracy_per_pair"
                                                                      : "accuracy_per_question"}};
      break;
    case bench::BenchmarkKind::llava_wild:
      table.columns = {{"n", true}, {"relative_score"}, {"mean_candidate"}, {"mean_reference"}};
      break;
    case bench::BenchmarkKind::mmhal:
      table.columns = {{"n", true}, {"mean_rating"}, {"hallucination_rate"}};
      break;
  }

  std::vector<std::string> tags;
  for (const auto& c : config.conditions) tags.push_back(c.tag());

  std::map<std::string, std::map<std::string, bench::PredictionRecord>> preds;
  std::map<std::string, std::map<std::string, bench::JudgeResult>> verdicts;
  for (const auto& tag : tags) {
    for (const auto& [id, payload] :
         records_by(run_dir / kPredictionsFile, "prediction", run_id, tag, true)) {
      preds[tag][id] = bench::PredictionRecord::from_json(payload);
    }
    for (const auto& [id, payload] : records_by(run_dir / kJudgeFile, "judge", run_id, tag, true)) {
      verdicts[tag][id] = bench::JudgeResult::from_json(payload);
    }
  }

  for (const auto& scope : scopes) {
    for (const auto& tag : tags) {
      // Dataset order, restricted to the scope and to samples with records.
      std::vector<bench::PredictionRecord> scoped;
      std::vector<bench::JudgeResult> judged;
      for (const auto& s : samples) {
        if (!scope.sample_ids.contains(s.sample_id)) continue;
        if (auto it = preds[tag].find(s.sample_id); it != preds[tag].end()) scoped.push_back(it->second);
        if (auto it = verdicts[tag].find(s.sample_id); it != verdicts[tag].end()) judged.push_back(it->second);
      }
      Row row{scope.name, tag, {}};
      switch (config.benchmark) {
        case bench::BenchmarkKind::pope_adversarial: {
          std::map<std::string, bool> golds;
          for (const auto& p : scoped) {
            golds[p.sample_id] = std::get<bench::YesNoGold>(by_id.at(p.sample_id)->gold).yes;
          }
          row.values = binary_values(bench::compute_binary_metrics(scoped, golds));
          break;
        }
        case bench::BenchmarkKind::mmvp: {
          auto units = config.mmvp_mode == bench::MmvpMode::per_pair ? complete_pairs(scoped, by_id)
                                                                     : scoped;
          const auto acc = bench::compute_mmvp_accuracy(units, samples, config.mmvp_mode);
          std::size_t bad = 0;
          for (const auto& p : units) {
            bad += p.extracted.kind == bench::Extracted::Kind::unparseable ? 1 : 0;
          }
          row.values = {static_cast<double>(acc.units), static_cast<double>(bad),
                        acc.units == 0 ? std::nan("") : acc.overall};
          break;
        }
        case bench::BenchmarkKind::llava_wild: {
          const auto rep = bench::aggregate_generative(judged, config.benchmark, {});
          double cand = 0, ref = 0;
          for (const auto& j : judged) {
            cand += j.candidate_score;
            ref += j.reference_score.value_or(0.0);
          }
          const double n = static_cast<double>(judged.size());
          row.values = {n, judged.empty() ? std::nan("") : rep.overall,
                        judged.empty() ? std::nan("") : cand / n,
                        judged.empty() ? std::nan("") : ref / n};
          break;
        }
        case bench::BenchmarkKind::mmhal: {
          const auto rep = bench::aggregate_generative(judged, config.benchmark, {},
                                                       config.hallucination_cutoff);
          row.values = {static_cast<double>(judged.size()),
                        judged.empty() ? std::nan("") : rep.overall,
                        judged.empty() ? std::nan("") : rep.hallucination_rate};
          break;
        }
      }
      table.rows.push_back(std::move(row));
    }
  }

  Report report;
  report.conditions = tags;
  const bool has_baseline = std::find(tags.begin(), tags.end(), "baseline") != tags.end();
  report.has_deltas = has_baseline && tags.size() >= 2;

  std::ostringstream tsv;
  tsv << "scope\tcondition";
  for (const auto& c : table.columns) tsv << "\t" << c.name;
  if (report.has_deltas) {
    for (const auto& c : table.columns) {
      if (!c.integer) tsv << "\tdelta_" << c.name;
    }
  }
  tsv << "\n";

  std::map<std::pair<std::string, std::string>, const Row*> index;
  for (const auto& r : table.rows) index[{r.scope, r.condition}] = &r;

  for (const auto& r : table.rows) {
    tsv << r.scope << "\t" << r.condition;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      tsv << "\t" << format_value(r.values[i], table.columns[i].integer);
    }
    if (report.has_deltas) {
      const Row* base = index.at({r.scope, "baseline"});
      for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (table.columns[i].integer) continue;
        tsv << "\t"
            << (r.condition == "baseline" ? "-"
                                          : format_value(r.values[i] - base->values[i], false));
      }
    }
    tsv << "\n";
  }
  report.tsv = tsv.str();
  report.digest = util::sha256_hex(report.tsv);

  std::ostringstream sum;
  sum << "benchmark: " << bench::to_string(config.benchmark) << "\n";
  sum << "run: " << run_id << "\n";
  sum << "samples: " << samples.size() << "\n";
  sum << "conditions: " << util::join(tags, ", ") << "\n";
  if (config.benchmark == bench::BenchmarkKind::mmvp) {
    sum << "mmvp accuracy mode: "
        << (config.mmvp_mode == bench::MmvpMode::per_pair ? "per_pair" : "per_question") << "\n";
  }
  sum << "\n";
  for (const auto& r : table.rows) {
    if (r.scope != "all") continue;
    sum << r.condition << ":";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      sum << " " << table.columns[i].name << "=" << format_value(r.values[i], table.columns[i].integer);
    }
    sum << "\n";
  }
  sum << "\nreport digest: " << report.digest << "\n";
  report.summary = sum.str();
  return report;
}

Report write_report(const fs::path& run_dir) {
  auto report = build_report(run_dir);
  for (const auto& [name, text] :
       {std::pair{kReportFile, &report.tsv}, std::pair{kSummaryFile, &report.summary}}) {
    std::ofstream out(run_dir / name, std::ios::binary | std::ios::trunc);
    out << *text;
    if (!out) throw IOFailure("cannot write " + (run_dir / name).string());
  }
  return report;
}

Report compare_conditions(const fs::path& run_dir) {
  const auto manifest = load_manifest(run_dir);
  if (manifest.status != "completed") {
    throw IncompleteRun("run " + manifest.run_id + " is " + manifest.status);
  }
  auto report = build_report(run_dir);
  if (report.conditions.size() < 2) {
    throw IncompleteRun("comparison needs at least two conditions");
  }
  if (!report.has_deltas) throw IncompleteRun("comparison needs a baseline condition");

  const auto config = RunConfig::from_json(manifest.config);
  for (const auto& tag : report.conditions) {
    const auto n = records_by(run_dir / kPredictionsFile, "prediction", config.run_id, tag, true).size();
    if (n == 0) throw IncompleteRun("condition " + tag + " has no predictions");
  }
  return report;
}

}  // namespace cfinc::runner
