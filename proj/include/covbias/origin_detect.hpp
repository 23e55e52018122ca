#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "covbias/corpus_io.hpp"
#include "covbias/error.hpp"
#include "covbias/ngram_lm.hpp"
#include "covbias/parallel.hpp"

namespace covbias {

// Both scorers must outlive the config.
template <SentenceScorer S>
struct DetectorConfig {
  const S* source_lm = nullptr;
  const S* target_lm = nullptr;
  double offset_c = 0.0;  // nats
  bool length_normalize = false;

  DetectorConfig(const S& source, const S& target, double offset = 0.0, bool normalize = false)
      : source_lm(&source), target_lm(&target), offset_c(offset), length_normalize(normalize) {
    if (!std::isfinite(offset_c)) throw Error(Errc::InvalidArgument, "offset must be finite");
  }
};

struct ScoreRecord {
  std::size_t line_no = 0;
  double score = 0.0;
  OriginLabel label = OriginLabel::TargetOriginal;

  bool operator==(const ScoreRecord&) const = default;

  // A score of exactly zero is target-original.
  static ScoreRecord from_score(std::size_t line_no, double score) {
    return {line_no, score, score > 0.0 ? OriginLabel::SourceOriginal : OriginLabel::TargetOriginal};
  }
};

// log P(x | source LM) - log P(y | target LM), without the offset.
template <SentenceScorer S>
double raw_score(const DetectorConfig<S>& cfg, const ParallelExample& ex) {
  const LmScore s = cfg.source_lm->score(ex.source);
  const LmScore t = cfg.target_lm->score(ex.target);
  if (cfg.length_normalize) return s.per_token() - t.per_token();
  return s.total_logprob - t.total_logprob;
}

template <SentenceScorer S>
double score_pair(const DetectorConfig<S>& cfg, const ParallelExample& ex) {
  return raw_score(cfg, ex) + cfg.offset_c;
}

// Scores a batch whose first element sits at `first_line`. Output order and
// values do not depend on `threads`.
template <SentenceScorer S>
std::vector<ScoreRecord> classify(const DetectorConfig<S>& cfg, std::span<const ParallelExample> examples,
                                  unsigned threads = 1, std::size_t first_line = 1) {
  auto scores = parallel_map(examples, threads, [&](const ParallelExample& ex) { return score_pair(cfg, ex); });
  std::vector<ScoreRecord> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out.push_back(ScoreRecord::from_score(first_line + i, scores[i]));
  return out;
}

// Applies an offset to precomputed raw scores.
inline std::vector<ScoreRecord> classify_scores(std::span<const ScoreRecord> raw, double offset_c) {
  std::vector<ScoreRecord> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(ScoreRecord::from_score(r.line_no, r.score + offset_c));
  return out;
}

struct Confusion {
  std::uint64_t tp_source = 0;  // predicted S, gold S
  std::uint64_t fp_source = 0;  // predicted S, gold T
  std::uint64_t fn_source = 0;  // predicted T, gold S
  std::uint64_t tn_source = 0;  // predicted T, gold T
};

struct DetectionReport {
  double macro_f1 = 0.0;
  double f1_source = 0.0;
  double f1_target = 0.0;
  double accuracy = 0.0;
  Confusion confusion;
};

namespace detail {

inline double f1_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  const std::uint64_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

inline DetectionReport report_from_confusion(const Confusion& c) {
  DetectionReport r;
  r.confusion = c;
  r.f1_source = f1_from_counts(c.tp_source, c.fp_source, c.fn_source);
  r.f1_target = f1_from_counts(c.tn_source, c.fn_source, c.fp_source);
  r.macro_f1 = (r.f1_source + r.f1_target) / 2.0;
  const std::uint64_t n = c.tp_source + c.fp_source + c.fn_source + c.tn_source;
  r.accuracy = n == 0 ? 0.0 : static_cast<double>(c.tp_source + c.tn_source) / static_cast<double>(n);
  return r;
}

// Macro-F1 as an exact fraction num/den so that candidate thresholds can be
// compared without rounding.
struct MacroF1Fraction {
  unsigned __int128 num;
  unsigned __int128 den;

  static MacroF1Fraction of(const Confusion& c) {
    const unsigned __int128 a = 2 * c.tp_source;
    const unsigned __int128 b = 2 * c.tp_source + c.fp_source + c.fn_source;
    const unsigned __int128 x = 2 * c.tn_source;
    const unsigned __int128 y = 2 * c.tn_source + c.fn_source + c.fp_source;
    // a/b + x/y with empty classes contributing 0/1.
    const unsigned __int128 bb = b == 0 ? 1 : b;
    const unsigned __int128 yy = y == 0 ? 1 : y;
    return {a * yy + x * bb, bb * yy};
  }

  friend int compare(const MacroF1Fraction& l, const MacroF1Fraction& r) {
    const unsigned __int128 lhs = l.num * r.den;
    const unsigned __int128 rhs = r.num * l.den;
    return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
  }
};

}  // namespace detail

inline DetectionReport evaluate_detection(std::span<const ScoreRecord> records, std::span<const OriginLabel> gold) {
  if (records.size() != gold.size())
    throw Error(Errc::LengthMismatch, std::to_string(records.size()) + " records vs " + std::to_string(gold.size()) +
                                          " gold labels");
  Confusion c;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const bool pred_s = records[i].label == OriginLabel::SourceOriginal;
    const bool gold_s = gold[i] == OriginLabel::SourceOriginal;
    if (pred_s && gold_s) ++c.tp_source;
    else if (pred_s) ++c.fp_source;
    else if (gold_s) ++c.fn_source;
    else ++c.tn_source;
  }
  return detail::report_from_confusion(c);
}

struct LabeledScore {
  double raw_score = 0.0;  // without offset
  OriginLabel gold = OriginLabel::TargetOriginal;
};

struct TuneResult {
  double offset_c = 0.0;
  double macro_f1 = 0.0;
  double threshold = 0.0;  // -offset_c
};

// Picks the offset that maximizes macro-F1 over all distinct decision
// boundaries: midpoints between adjacent distinct scores plus one point a
// unit below the minimum and one above the maximum. Ties prefer the wider
// margin (half the gap, or 1 for the outer points), then the smaller |c|.
inline TuneResult tune_offset(std::span<const LabeledScore> data) {
  std::uint64_t total_s = 0, total_t = 0;
  for (const auto& d : data) {
    if (!std::isfinite(d.raw_score)) throw Error(Errc::InvalidArgument, "non-finite score in tuning data");
    (d.gold == OriginLabel::SourceOriginal ? total_s : total_t)++;
  }
  if (total_s == 0 || total_t == 0) throw Error(Errc::SingleClassInput, "tuning data needs both origin labels");

  std::vector<LabeledScore> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.raw_score < b.raw_score; });

  // Distinct values with the gold counts at each value.
  struct Group {
    double value;
    std::uint64_t s = 0, t = 0;
  };
  std::vector<Group> groups;
  for (const auto& d : sorted) {
    if (groups.empty() || groups.back().value != d.raw_score) groups.push_back({d.raw_score});
    (d.gold == OriginLabel::SourceOriginal ? groups.back().s : groups.back().t)++;
  }

  // Candidate j predicts S for groups[j..]; j == 0 is below the minimum,
  // j == groups.size() above the maximum.
  std::uint64_t below_s = 0, below_t = 0;
  bool have_best = false;
  detail::MacroF1Fraction best_f1{0, 1};
  Confusion best_conf;
  double best_margin = 0.0, best_threshold = 0.0;
  for (std::size_t j = 0; j <= groups.size(); ++j) {
    if (j > 0) {
      below_s += groups[j - 1].s;
      below_t += groups[j - 1].t;
    }
    double threshold, margin;
    if (j == 0) {
      threshold = groups.front().value - 1.0;
      margin = 1.0;
    } else if (j == groups.size()) {
      threshold = groups.back().value + 1.0;
      margin = 1.0;
    } else {
      const double lo = groups[j - 1].value, hi = groups[j].value;
      threshold = lo + (hi - lo) / 2.0;
      if (!(threshold < hi)) threshold = lo;
      margin = (hi - lo) / 2.0;
    }
    Confusion c;
    c.tp_source = total_s - below_s;
    c.fp_source = total_t - below_t;
    c.fn_source = below_s;
    c.tn_source = below_t;
    const auto f1 = detail::MacroF1Fraction::of(c);
    bool better = !have_best;
    if (have_best) {
      const int cmp = compare(f1, best_f1);
      if (cmp > 0) better = true;
      else if (cmp == 0) {
        if (margin > best_margin) better = true;
        else if (margin == best_margin && std::abs(threshold) < std::abs(best_threshold)) better = true;
      }
    }
    if (better) {
      have_best = true;
      best_f1 = f1;
      best_conf = c;
      best_margin = margin;
      best_threshold = threshold;
    }
  }
  TuneResult r;
  r.threshold = best_threshold;
  r.offset_c = best_threshold == 0.0 ? 0.0 : -best_threshold;
  r.macro_f1 = detail::report_from_confusion(best_conf).macro_f1;
  return r;
}

struct SelectionSpec {
  double ratio_percent = 50.0;

  explicit SelectionSpec(double r) : ratio_percent(r) {
    if (!(r > 0.0 && r <= 50.0)) throw Error(Errc::InvalidArgument, "selection ratio must be in (0, 50]");
  }
};

struct Selection {
  std::vector<std::size_t> most_source;  // ascending line numbers
  std::vector<std::size_t> most_target;
};

inline std::size_t selection_size(std::size_t n, const SelectionSpec& spec) {
  return static_cast<std::size_t>(std::floor(spec.ratio_percent * static_cast<double>(n) / 100.0 + 1e-9));
}

// Ranks by score descending with smaller line numbers first on ties; the
// head of the ranking is most source-original, the tail most target-original.
inline Selection select_extremes(std::span<const ScoreRecord> records, const SelectionSpec& spec) {
  if (records.empty()) throw Error(Errc::EmptyInput, "no score records to select from");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].score != records[b].score) return records[a].score > records[b].score;
    return records[a].line_no < records[b].line_no;
  });
  const std::size_t k = selection_size(records.size(), spec);
  Selection sel;
  for (std::size_t i = 0; i < k; ++i) {
    sel.most_source.push_back(records[order[i]].line_no);
    sel.most_target.push_back(records[order[order.size() - k + i]].line_no);
  }
  std::sort(sel.most_source.begin(), sel.most_source.end());
  std::sort(sel.most_target.begin(), sel.most_target.end());
  return sel;
}

}  // namespace covbias
