#pragma once

// TSV readers and writers for every report the toolkit produces.

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "covbias/adequacy_fmeasure.hpp"
#include "covbias/data_prep.hpp"
#include "covbias/fluency_abstraction.hpp"
#include "covbias/origin_detect.hpp"
#include "covbias/tsv.hpp"
#include "covbias/vocab_divergence.hpp"

namespace covbias::reports {

inline void write_scores(std::ostream& out, std::span<const ScoreRecord> records) {
  tsv::Writer w(out);
  w.row("line_no", "score", "label");
  for (const auto& r : records) w.row(r.line_no, r.score, label_code(r.label));
}

inline std::vector<ScoreRecord> read_scores(const std::filesystem::path& path) {
  tsv::Reader in(path, {"line_no", "score", "label"});
  std::vector<ScoreRecord> out;
  std::vector<std::string_view> c;
  while (in.next(c)) {
    const auto line = in.line_no();
    ScoreRecord r{tsv::parse_uint(c[0], line), tsv::parse_double(c[1], line), parse_label(c[2], line)};
    if (r != ScoreRecord::from_score(r.line_no, r.score))
      throw Error(Errc::Format, "label disagrees with the sign of the score", line);
    out.push_back(r);
  }
  return out;
}

inline std::vector<LabeledScore> read_tuning(const std::filesystem::path& path) {
  tsv::Reader in(path, {"score", "gold"});
  std::vector<LabeledScore> out;
  std::vector<std::string_view> c;
  while (in.next(c)) out.push_back({tsv::parse_double(c[0], in.line_no()), parse_label(c[1], in.line_no())});
  return out;
}

inline void write_tuning(std::ostream& out, std::span<const LabeledScore> data) {
  tsv::Writer w(out);
  w.row("score", "gold");
  for (const auto& d : data) w.row(d.raw_score, label_code(d.gold));
}

inline void write_tune_result(std::ostream& out, const TuneResult& r) {
  tsv::Writer w(out);
  w.row("offset_c", "macro_f1");
  w.row(r.offset_c, r.macro_f1);
}

inline TuneResult read_tune_result(const std::filesystem::path& path) {
  tsv::Reader in(path, {"offset_c", "macro_f1"});
  std::vector<std::string_view> c;
  if (!in.next(c)) throw Error(Errc::Format, "tuning result has no data row");
  TuneResult r;
  r.offset_c = tsv::parse_double(c[0], in.line_no());
  r.macro_f1 = tsv::parse_double(c[1], in.line_no());
  r.threshold = -r.offset_c;
  return r;
}

inline void write_detection(std::ostream& out, const DetectionReport& r) {
  tsv::Writer w(out);
  w.row("metric", "value");
  w.row("macro_f1", r.macro_f1);
  w.row("f1_source", r.f1_source);
  w.row("f1_target", r.f1_target);
  w.row("accuracy", r.accuracy);
}

inline std::vector<OriginLabel> read_labels(const std::filesystem::path& path) {
  LineReader in(path);
  std::vector<OriginLabel> out;
  std::string line;
  while (in.next(line)) out.push_back(parse_label(line, in.line_no()));
  return out;
}

// Two-group line assignment shared by `select` and `random-split`.
inline void write_partition(std::ostream& out, const Partition& p) {
  std::vector<std::pair<std::size_t, char>> rows;
  for (auto l : p.first) rows.emplace_back(l, 'S');
  for (auto l : p.second) rows.emplace_back(l, 'T');
  std::sort(rows.begin(), rows.end());
  tsv::Writer w(out);
  w.row("line_no", "group");
  for (const auto& [l, g] : rows) w.row(l, g);
}

inline Partition read_partition(const std::filesystem::path& path) {
  tsv::Reader in(path, {"line_no", "group"});
  Partition p;
  std::vector<std::string_view> c;
  while (in.next(c)) {
    const auto line = tsv::parse_uint(c[0], in.line_no());
    (parse_label(c[1], in.line_no()) == OriginLabel::SourceOriginal ? p.first : p.second).push_back(line);
  }
  return p;
}

inline Partition to_partition(const Selection& s) { return {s.most_source, s.most_target}; }

inline void write_divergence(std::ostream& out, const DivergenceReport& r) {
  tsv::Writer w(out);
  w.row("class", "js_nats", "js_scaled");
  for (const auto& row : r.rows) w.row(word_class_name(row.word_class), row.js_nats, row.js_scaled());
}

inline void write_adequacy(std::ostream& out, const AdequacyReport& r) {
  tsv::Writer w(out);
  w.row("bucket", "precision", "recall", "f1", "matched", "sys_count", "ref_count");
  for (const auto& [name, b] : r.per_bucket) w.row(name, b.precision, b.recall, b.f1, b.matched, b.sys_count, b.ref_count);
}

inline AdequacyReport read_adequacy(const std::filesystem::path& path) {
  tsv::Reader in(path, {"bucket", "precision", "recall", "f1", "matched", "sys_count", "ref_count"});
  AdequacyReport r;
  std::vector<std::string_view> c;
  while (in.next(c)) {
    const auto l = in.line_no();
    r.per_bucket[std::string(c[0])] = BucketStats{tsv::parse_double(c[1], l), tsv::parse_double(c[2], l),
                                                  tsv::parse_double(c[3], l), tsv::parse_uint(c[4], l),
                                                  tsv::parse_uint(c[5], l),   tsv::parse_uint(c[6], l)};
  }
  return r;
}

inline void write_deltas(std::ostream& out, std::span<const BucketDelta> deltas) {
  tsv::Writer w(out);
  w.row("bucket", "f1_a", "f1_b", "delta", "sign");
  for (const auto& d : deltas) w.row(d.bucket, d.f1_a, d.f1_b, d.delta, d.sign());
}

inline void write_fluency(std::ostream& out, const FluencyReport& r) {
  tsv::Writer w(out);
  w.row("level", "ppl", "diff_percent");
  auto diff = [](const FluencyLevel& l) {
    return l.relative_diff ? tsv::format_double(*l.relative_diff * 100.0) : std::string("NA");
  };
  w.row("no_abs", r.plain.ppl, diff(r.plain));
  w.row("cont_abs", r.abstracted.ppl, diff(r.abstracted));
}

inline FluencyReport read_fluency(const std::filesystem::path& path) {
  tsv::Reader in(path, {"level", "ppl", "diff_percent"});
  FluencyReport r;
  bool plain = false, abs = false;
  std::vector<std::string_view> c;
  while (in.next(c)) {
    FluencyLevel lvl;
    lvl.ppl = tsv::parse_double(c[1], in.line_no());
    if (c[2] != "NA") lvl.relative_diff = tsv::parse_double(c[2], in.line_no()) / 100.0;
    if (c[0] == "no_abs") {
      r.plain = lvl;
      plain = true;
    } else if (c[0] == "cont_abs") {
      r.abstracted = lvl;
      abs = true;
    } else {
      throw Error(Errc::Format, "unknown fluency level '" + std::string(c[0]) + "'", in.line_no());
    }
  }
  if (!plain || !abs) throw Error(Errc::Format, "fluency report needs no_abs and cont_abs rows");
  return r;
}

inline void write_manifest(std::ostream& out, std::span<const ManifestRow> rows) {
  tsv::Writer w(out);
  w.row("output_line_no", "provenance", "original_line_no");
  for (const auto& r : rows) w.row(r.output_line_no, provenance_name(r.provenance), r.original_line_no);
}

}  // namespace covbias::reports
