#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covbias/corpus_io.hpp"
#include "covbias/error.hpp"
#include "covbias/origin_detect.hpp"
#include "covbias/vocab_divergence.hpp"

namespace covbias {

struct TagPolicy {
  std::string tag_token;

  explicit TagPolicy(std::string tag) : tag_token(std::move(tag)) {
    if (!is_valid_token(tag_token)) throw Error(Errc::InvalidArgument, "tag token must be non-empty without whitespace");
  }

  static TagPolicy origin() { return TagPolicy("<TORIG>"); }
  static TagPolicy synthetic() { return TagPolicy("<BT>"); }
};

namespace detail {

template <class Range>
void check_tag_absent(const Range& examples, const TagPolicy& policy, const char* what) {
  std::size_t line = 0;
  for (const ParallelExample& ex : examples) {
    ++line;
    for (const auto* s : {&ex.source, &ex.target})
      if (std::find(s->tokens.begin(), s->tokens.end(), policy.tag_token) != s->tokens.end())
        throw Error(Errc::TagCollision, "'" + policy.tag_token + "' already occurs in " + what, line);
  }
}

inline void prepend_tag(ParallelExample& ex, const TagPolicy& policy) {
  ex.source.tokens.insert(ex.source.tokens.begin(), policy.tag_token);
}

}  // namespace detail

// Prepends the tag to the source side of every target-original example.
inline std::vector<ParallelExample> bias_tag(std::span<const ParallelExample> examples,
                                             std::span<const OriginLabel> labels, const TagPolicy& policy) {
  if (examples.size() != labels.size())
    throw Error(Errc::LengthMismatch, std::to_string(examples.size()) + " examples vs " +
                                          std::to_string(labels.size()) + " labels");
  detail::check_tag_absent(examples, policy, "the corpus");
  std::vector<ParallelExample> out(examples.begin(), examples.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].origin = labels[i];
    if (labels[i] == OriginLabel::TargetOriginal) detail::prepend_tag(out[i], policy);
  }
  return out;
}

// Removes one leading tag token from the source side where present.
inline std::vector<ParallelExample> detag(std::span<const ParallelExample> examples, const TagPolicy& policy) {
  std::vector<ParallelExample> out(examples.begin(), examples.end());
  for (auto& ex : out) {
    auto& t = ex.source.tokens;
    if (t.size() > 1 && t.front() == policy.tag_token) t.erase(t.begin());
  }
  return out;
}

inline std::vector<OriginLabel> labels_of(std::span<const ScoreRecord> records) {
  std::vector<OriginLabel> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

enum class Provenance { Authentic, Synthetic, SourceOriginal };

constexpr const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Authentic: return "authentic";
    case Provenance::Synthetic: return "synthetic";
    case Provenance::SourceOriginal: return "source_original";
  }
  return "?";
}

struct ManifestRow {
  std::size_t output_line_no = 0;
  Provenance provenance = Provenance::Authentic;
  std::size_t original_line_no = 0;
};

// Pre-training keeps the full corpus; fine-tuning keeps only the designated
// source-original lines in their original order.
struct FinetuneSplit {
  std::size_t pretrain_size = 0;
  std::vector<std::size_t> finetune_lines;  // ascending, 1-based
  std::vector<ManifestRow> manifest;
};

inline FinetuneSplit finetune_split(std::size_t n_examples, std::vector<std::size_t> source_original_lines) {
  std::sort(source_original_lines.begin(), source_original_lines.end());
  if (std::adjacent_find(source_original_lines.begin(), source_original_lines.end()) != source_original_lines.end())
    throw Error(Errc::InvalidArgument, "duplicate line in fine-tuning selection");
  FinetuneSplit split;
  split.pretrain_size = n_examples;
  for (std::size_t line : source_original_lines) {
    if (line == 0 || line > n_examples)
      throw Error(Errc::LengthMismatch, "selected line " + std::to_string(line) + " outside corpus of " +
                                            std::to_string(n_examples));
    split.manifest.push_back({split.finetune_lines.size() + 1, Provenance::SourceOriginal, line});
    split.finetune_lines.push_back(line);
  }
  return split;
}

inline FinetuneSplit finetune_split(std::size_t n_examples, std::span<const ScoreRecord> records) {
  if (records.size() != n_examples)
    throw Error(Errc::LengthMismatch, std::to_string(records.size()) + " records for " + std::to_string(n_examples) +
                                          " examples");
  std::vector<std::size_t> lines;
  for (const auto& r : records)
    if (r.label == OriginLabel::SourceOriginal) lines.push_back(r.line_no);
  return finetune_split(n_examples, std::move(lines));
}

inline FinetuneSplit finetune_split(std::size_t n_examples, const Selection& selection) {
  return finetune_split(n_examples, selection.most_source);
}

template <class T>
std::vector<T> gather_lines(std::span<const T> items, std::span<const std::size_t> lines) {
  std::vector<T> out;
  out.reserve(lines.size());
  for (std::size_t l : lines) out.push_back(items[l - 1]);
  return out;
}

struct MergeResult {
  std::vector<ParallelExample> merged;
  std::vector<ManifestRow> manifest;
};

// Authentic then synthetic, or a seeded permutation of both. Synthetic
// pairs get the policy's tag on the source side when a policy is given.
inline MergeResult merge_augment(std::span<const ParallelExample> authentic, std::span<const ParallelExample> synthetic,
                                 const std::optional<TagPolicy>& policy, std::optional<std::uint64_t> shuffle_seed) {
  if (policy) {
    detail::check_tag_absent(authentic, *policy, "the authentic corpus");
    detail::check_tag_absent(synthetic, *policy, "the synthetic corpus");
  }
  const std::size_t n = authentic.size() + synthetic.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (shuffle_seed) order = detail::seeded_permutation(n, *shuffle_seed);

  MergeResult r;
  r.merged.reserve(n);
  r.manifest.reserve(n);
  for (std::size_t i : order) {
    const bool syn = i >= authentic.size();
    const std::size_t local = syn ? i - authentic.size() : i;
    ParallelExample ex = syn ? synthetic[local] : authentic[local];
    if (syn && policy) detail::prepend_tag(ex, *policy);
    r.merged.push_back(std::move(ex));
    r.manifest.push_back({r.merged.size(), syn ? Provenance::Synthetic : Provenance::Authentic, local + 1});
  }
  return r;
}

}  // namespace covbias
