#include <cmath>

#include "cfinc/bench.hpp"
#include "cfinc/error.hpp"

namespace cfinc::bench {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

BinaryMetrics binary_metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                                         std::size_t tn, std::size_t unparseable) {
  BinaryMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  m.unparseable = unparseable;
  m.total = tp + fp + fn + tn;
  m.accuracy = ratio(tp + tn, m.total);
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = m.precision + m.recall == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  m.yes_ratio = ratio(tp + fp, m.total);
  return m;
}

BinaryMetrics compute_binary_metrics(const std::vector<PredictionRecord>& preds,
                                     const std::map<std::string, bool>& golds) {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0, bad = 0;
  for (const auto& p : preds) {
    const auto it = golds.find(p.sample_id);
    if (it == golds.end()) throw MissingGold("no gold label for sample '" + p.sample_id + "'");
    const bool gold_yes = it->second;
    switch (p.extracted.kind) {
      case Extracted::Kind::yes: gold_yes ? ++tp : ++fp; break;
      case Extracted::Kind::no: gold_yes ? ++fn : ++tn; break;
      default:
        ++bad;
        gold_yes ? ++fn : ++fp;
        break;
    }
  }
  auto m = binary_metrics_from_counts(tp, fp, fn, tn, bad);
  // Unparseable answers are wrong but never count as a "yes".
  std::size_t yes = 0;
  for (const auto& p : preds) yes += p.extracted.kind == Extracted::Kind::yes ? 1 : 0;
  m.yes_ratio = ratio(yes, m.total);
  return m;
}

MmvpAccuracy compute_mmvp_accuracy(const std::vector<PredictionRecord>& preds,
                                   const std::vector<BenchmarkSample>& golds, MmvpMode mode) {
  std::map<std::string, const BenchmarkSample*> by_id;
  for (const auto& s : golds) by_id[s.sample_id] = &s;

  MmvpAccuracy out;
  out.mode = mode;
  std::map<std::string, std::size_t> correct_per_pattern;
  std::size_t correct = 0;

  auto pattern_of = [](const BenchmarkSample& s) {
    const auto it = s.metadata.find("pattern");
    return it == s.metadata.end() ? std::string() : it->second;
  };
  auto lookup = [&](const PredictionRecord& p) -> const BenchmarkSample& {
    const auto it = by_id.find(p.sample_id);
    if (it == by_id.end()) throw MissingGold("no gold for sample '" + p.sample_id + "'");
    return *it->second;
  };

  if (mode == MmvpMode::per_question) {
    for (const auto& p : preds) {
      const auto& s = lookup(p);
      const bool ok = is_correct(s, p.extracted);
      const auto pattern = pattern_of(s);
      ++out.pattern_units[pattern];
      if (ok) {
        ++correct;
        ++correct_per_pattern[pattern];
      }
    }
    out.units = preds.size();
  } else {
    struct Pair {
      std::size_t questions = 0;
      bool all_correct = true;
      std::string pattern;
    };
    std::map<std::string, Pair> pairs;
    for (const auto& p : preds) {
      const auto& s = lookup(p);
      const auto it = s.metadata.find("pair_id");
      if (it == s.metadata.end() || it->second.empty()) {
        throw MissingPairId("sample '" + s.sample_id + "' has no pair id");
      }
      auto& pair = pairs[it->second];
      ++pair.questions;
      pair.all_correct = pair.all_correct && is_correct(s, p.extracted);
      pair.pattern = pattern_of(s);
    }
    for (const auto& [id, pair] : pairs) {
      if (pair.questions != 2) {
        throw MissingPairId("pair '" + id + "' has " + std::to_string(pair.questions) +
                            " questions, expected 2");
      }
      ++out.pattern_units[pair.pattern];
      if (pair.all_correct) {
        ++correct;
        ++correct_per_pattern[pair.pattern];
      }
    }
    out.units = pairs.size();
  }

  out.overall = ratio(correct, out.units);
  for (const auto& [pattern, n] : out.pattern_units) {
    out.per_pattern[pattern] = ratio(correct_per_pattern[pattern], n);
  }
  return out;
}

GenerativeReport aggregate_generative(const std::vector<JudgeResult>& results, BenchmarkKind kind,
                                      const std::map<std::string, std::string>& category_of,
                                      double hallucination_cutoff) {
  GenerativeReport out;
  out.kind = kind;
  out.n = results.size();
  if (results.empty()) return out;

  struct Acc {
    double cand = 0, ref = 0;
    std::size_t n = 0, below = 0;
  };
  Acc all;
  std::map<std::string, Acc> per;
  for (const auto& r : results) {
    const auto it = category_of.find(r.sample_id);
    const auto cat = it == category_of.end() ? std::string() : it->second;
    for (Acc* a : {&all, &per[cat]}) {
      a->cand += r.candidate_score;
      a->ref += r.reference_score.value_or(0.0);
      ++a->n;
      if (r.candidate_score < hallucination_cutoff) ++a->below;
    }
  }

  auto headline = [&](const Acc& a) {
    if (kind == BenchmarkKind::llava_wild) {
      // Relative score; reference scores are >= 1 so the denominator is positive.
      return a.ref == 0.0 ? std::nan("") : 100.0 * (a.cand / a.n) / (a.ref / a.n);
    }
    return a.cand / static_cast<double>(a.n);
  };
  out.overall = headline(all);
  for (const auto& [cat, a] : per) out.per_category[cat] = headline(a);
  if (kind == BenchmarkKind::mmhal) {
    out.hallucination_rate = ratio(all.below, all.n);
    for (const auto& [cat, a] : per) out.hallucination_rate_per_category[cat] = ratio(a.below, a.n);
  }
  return out;
}

InformationSplit split_by_information_level(const std::vector<keywords::KeywordRecord>& records) {
  InformationSplit out;
  for (const auto& r : records) {
    (r.factual.size() <= kLowInformationMaxKeywords ? out.low : out.high).push_back(r.image_ref);
  }
  return out;
}

}  // namespace cfinc::bench
