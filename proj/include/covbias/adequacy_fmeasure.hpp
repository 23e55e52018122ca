#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "covbias/corpus_io.hpp"
#include "covbias/error.hpp"
#include "covbias/parallel.hpp"
#include "covbias/word_classes.hpp"

namespace covbias {

// Bucket name -> POS tags. Shares the sectioned file format of word classes.
using BucketMap = TagSections;

struct BucketStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t matched = 0;
  std::uint64_t sys_count = 0;
  std::uint64_t ref_count = 0;

  bool operator==(const BucketStats&) const = default;
};

struct AdequacyReport {
  std::map<std::string, BucketStats> per_bucket;
};

inline BucketStats finalize_bucket(std::uint64_t matched, std::uint64_t sys, std::uint64_t ref) {
  BucketStats b;
  b.matched = matched;
  b.sys_count = sys;
  b.ref_count = ref;
  b.precision = sys == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(sys);
  b.recall = ref == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(ref);
  b.f1 = (b.precision > 0.0 && b.recall > 0.0) ? 2.0 * b.precision * b.recall / (b.precision + b.recall) : 0.0;
  return b;
}

// Assigns each reference word type to at most one bucket: take the type's
// most frequent tag over the reference corpus (ties to the smallest tag),
// then the lexicographically smallest bucket listing that tag.
inline std::unordered_map<std::string, std::size_t> bucket_membership(std::span<const Sentence> ref,
                                                                      std::span<const PosAnnotation> ref_pos,
                                                                      const BucketMap& buckets) {
  if (ref.size() != ref_pos.size())
    throw Error(Errc::LengthMismatch, "reference has " + std::to_string(ref.size()) + " lines, annotations " +
                                          std::to_string(ref_pos.size()));
  std::unordered_map<std::string, std::map<std::string, std::uint64_t>> tag_counts;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (ref[i].size() != ref_pos[i].size())
      throw Error(Errc::PosAlignment, "reference tag count differs from token count", i + 1);
    for (std::size_t k = 0; k < ref[i].size(); ++k) ++tag_counts[ref[i].tokens[k]][ref_pos[i].tags[k]];
  }
  std::map<std::string, std::size_t> tag_to_bucket;
  std::size_t index = 0;
  for (const auto& [name, tags] : buckets) {
    for (const auto& t : tags) tag_to_bucket.try_emplace(t, index);
    ++index;
  }
  std::unordered_map<std::string, std::size_t> out;
  for (const auto& [word, tags] : tag_counts) {
    const std::string* best = nullptr;
    std::uint64_t best_n = 0;
    for (const auto& [tag, n] : tags)
      if (n > best_n) {
        best = &tag;
        best_n = n;
      }
    if (auto it = tag_to_bucket.find(*best); it != tag_to_bucket.end()) out.emplace(word, it->second);
  }
  return out;
}

// Clipped bag-of-words F-measure per bucket. Hypothesis tokens inherit the
// bucket of their reference type; tokens never seen in the reference belong
// to no bucket.
inline AdequacyReport word_fmeasure(std::span<const Sentence> hyp, std::span<const Sentence> ref,
                                    std::span<const PosAnnotation> ref_pos, const BucketMap& buckets,
                                    unsigned threads = 1) {
  if (hyp.size() != ref.size())
    throw Error(Errc::LengthMismatch, "hypothesis has " + std::to_string(hyp.size()) + " lines, reference " +
                                          std::to_string(ref.size()));
  const auto membership = bucket_membership(ref, ref_pos, buckets);
  const std::size_t nb = buckets.size();

  struct Triple {
    std::uint64_t matched = 0, sys = 0, ref = 0;
  };
  std::vector<std::size_t> lines(hyp.size());
  for (std::size_t i = 0; i < lines.size(); ++i) lines[i] = i;
  auto per_line = parallel_map(std::span<const std::size_t>(lines), threads, [&](std::size_t i) {
    std::vector<Triple> acc(nb);
    std::unordered_map<std::string_view, std::pair<std::uint64_t, std::uint64_t>> bag;  // hyp, ref
    for (const auto& t : hyp[i].tokens) ++bag[t].first;
    for (const auto& t : ref[i].tokens) ++bag[t].second;
    for (const auto& [word, c] : bag) {
      auto it = membership.find(std::string(word));
      if (it == membership.end()) continue;
      auto& b = acc[it->second];
      b.sys += c.first;
      b.ref += c.second;
      b.matched += std::min(c.first, c.second);
    }
    return acc;
  });

  std::vector<Triple> total(nb);
  for (const auto& line : per_line)
    for (std::size_t b = 0; b < nb; ++b) {
      total[b].matched += line[b].matched;
      total[b].sys += line[b].sys;
      total[b].ref += line[b].ref;
    }
  AdequacyReport report;
  std::size_t b = 0;
  for (const auto& [name, _] : buckets) {
    report.per_bucket.emplace(name, finalize_bucket(total[b].matched, total[b].sys, total[b].ref));
    ++b;
  }
  return report;
}

struct BucketDelta {
  std::string bucket;
  double f1_a = 0.0;
  double f1_b = 0.0;
  double delta = 0.0;  // f1_b - f1_a

  char sign() const { return delta > 0.0 ? '+' : (delta < 0.0 ? '-' : '='); }
};

inline std::vector<BucketDelta> compare_reports(const AdequacyReport& a, const AdequacyReport& b) {
  std::vector<BucketDelta> out;
  if (a.per_bucket.size() != b.per_bucket.size())
    throw Error(Errc::BucketMismatch, "reports have different bucket counts");
  for (const auto& [name, sa] : a.per_bucket) {
    auto it = b.per_bucket.find(name);
    if (it == b.per_bucket.end()) throw Error(Errc::BucketMismatch, "bucket '" + name + "' missing in second report");
    out.push_back({name, sa.f1, it->second.f1, it->second.f1 - sa.f1});
  }
  return out;
}

}  // namespace covbias
