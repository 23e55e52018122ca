#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "covbias/corpus_io.hpp"
#include "covbias/error.hpp"
#include "covbias/word_classes.hpp"

namespace covbias {

enum class Side { Source, Target };
enum class WordClass { All, Content, Function };

constexpr const char* word_class_name(WordClass c) {
  switch (c) {
    case WordClass::All: return "all";
    case WordClass::Content: return "content";
    case WordClass::Function: return "function";
  }
  return "?";
}

// Word counts; probabilities are count / total. Tokens are kept in
// byte-lexicographic order, which fixes the summation order of every
// divergence computed from it.
class VocabDistribution {
 public:
  VocabDistribution() = default;
  explicit VocabDistribution(std::map<std::string, std::uint64_t> counts) : counts_(std::move(counts)) {
    for (auto it = counts_.begin(); it != counts_.end();) {
      if (it->second == 0) it = counts_.erase(it);
      else total_ += (it++)->second;
    }
  }

  void add(const std::string& token, std::uint64_t n = 1) {
    if (n == 0) return;
    counts_[token] += n;
    total_ += n;
  }

  const std::map<std::string, std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total() const { return total_; }
  bool empty() const { return total_ == 0; }

  double probability(const std::string& token) const {
    auto it = counts_.find(token);
    return it == counts_.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total_);
  }

 private:
  std::map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

namespace detail {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Walks the union vocabulary of two distributions in token order, calling
// fn(p_i, q_i).
template <class Fn>
void for_each_union(const VocabDistribution& p, const VocabDistribution& q, Fn fn) {
  const double pt = static_cast<double>(p.total()), qt = static_cast<double>(q.total());
  auto a = p.counts().begin(), ae = p.counts().end();
  auto b = q.counts().begin(), be = q.counts().end();
  while (a != ae || b != be) {
    if (b == be || (a != ae && a->first < b->first)) {
      fn(static_cast<double>(a->second) / pt, 0.0);
      ++a;
    } else if (a == ae || b->first < a->first) {
      fn(0.0, static_cast<double>(b->second) / qt);
      ++b;
    } else {
      fn(static_cast<double>(a->second) / pt, static_cast<double>(b->second) / qt);
      ++a;
      ++b;
    }
  }
}

inline double xlogx_over(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(x / y); }

inline void require_nonempty(const VocabDistribution& d, const char* what) {
  if (d.empty()) throw Error(Errc::EmptySelection, std::string(what) + " distribution is empty");
}

}  // namespace detail

// KL(p || q) in nats; +inf when p puts mass where q has none.
inline double kl(const VocabDistribution& p, const VocabDistribution& q) {
  detail::require_nonempty(p, "p");
  detail::require_nonempty(q, "q");
  detail::CompensatedSum sum;
  bool infinite = false;
  detail::for_each_union(p, q, [&](double pi, double qi) {
    if (pi > 0.0 && qi == 0.0) infinite = true;
    else sum.add(detail::xlogx_over(pi, qi));
  });
  if (infinite) return std::numeric_limits<double>::infinity();
  return std::max(0.0, sum.value());
}

// Jensen-Shannon divergence in nats against the even mixture; lies in
// [0, ln 2] and is symmetric bit-for-bit.
inline double js(const VocabDistribution& p, const VocabDistribution& q) {
  detail::require_nonempty(p, "p");
  detail::require_nonempty(q, "q");
  detail::CompensatedSum sum;
  detail::for_each_union(p, q, [&](double pi, double qi) {
    const double m = (pi + qi) / 2.0;
    sum.add(detail::xlogx_over(pi, m) + detail::xlogx_over(qi, m));
  });
  return std::clamp(sum.value() / 2.0, 0.0, std::numbers::ln2);
}

namespace detail {

inline const Sentence& side_of(const ParallelExample& ex, Side side) {
  return side == Side::Source ? ex.source : ex.target;
}
inline const std::optional<PosAnnotation>& pos_of(const ParallelExample& ex, Side side) {
  return side == Side::Source ? ex.source_pos : ex.target_pos;
}

// Adds the tokens of one example to dist[All], dist[Content], dist[Function].
inline void accumulate(const ParallelExample& ex, Side side, const WordClassMap& classes, bool with_classes,
                       std::size_t line_no, std::array<VocabDistribution, 3>& dist) {
  const Sentence& s = side_of(ex, side);
  const auto& pos = pos_of(ex, side);
  if (with_classes && !pos) throw Error(Errc::MissingPosAnnotations, "POS tags required for word classes", line_no);
  if (with_classes && pos->size() != s.size())
    throw Error(Errc::PosAlignment, "tag count differs from token count", line_no);
  for (std::size_t i = 0; i < s.size(); ++i) {
    dist[0].add(s.tokens[i]);
    if (with_classes) dist[classes.is_content(pos->tags[i]) ? 1 : 2].add(s.tokens[i]);
  }
}

}  // namespace detail

// Token distribution over one side of `examples`, restricted to a word class.
// Example i is line i+1.
template <class Range>
VocabDistribution build_distribution(const Range& examples, Side side, WordClass word_class,
                                     const WordClassMap& classes = {}) {
  std::array<VocabDistribution, 3> dist;
  const bool with_classes = word_class != WordClass::All;
  std::size_t line = 0;
  for (const ParallelExample& ex : examples) detail::accumulate(ex, side, classes, with_classes, ++line, dist);
  VocabDistribution& out = dist[static_cast<std::size_t>(word_class)];
  if (out.empty())
    throw Error(Errc::EmptySelection, std::string("no tokens in word class '") + word_class_name(word_class) + "'");
  return std::move(out);
}

struct DivergenceRow {
  WordClass word_class;
  double js_nats;

  // Presentation scale used in published tables (units of 1e-5 nats).
  double js_scaled() const { return js_nats * 1e5; }
};

struct DivergenceReport {
  std::vector<DivergenceRow> rows;
};

// Line partition: two disjoint sets of 1-based line numbers.
struct Partition {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
};

// Streams examples once, accumulating both partitions' distributions.
// Without word classes only the "all" row is produced.
class DivergenceAccumulator {
 public:
  DivergenceAccumulator(const Partition& partition, std::size_t n_lines, Side side, WordClassMap classes,
                        bool with_classes)
      : membership_(n_lines + 1, 0), side_(side), classes_(std::move(classes)), with_classes_(with_classes) {
    for (std::size_t l : partition.first) mark(l, 1);
    for (std::size_t l : partition.second) mark(l, 2);
  }

  void add(const ParallelExample& ex, std::size_t line_no) {
    if (line_no >= membership_.size()) throw Error(Errc::LengthMismatch, "line outside the partition's range", line_no);
    const int group = membership_[line_no];
    if (group == 0) return;
    detail::accumulate(ex, side_, classes_, with_classes_, line_no, group == 1 ? first_ : second_);
  }

  DivergenceReport report() const {
    DivergenceReport r;
    const int rows = with_classes_ ? 3 : 1;
    for (int c = 0; c < rows; ++c) {
      const auto wc = static_cast<WordClass>(c);
      if (first_[c].empty() || second_[c].empty())
        throw Error(Errc::EmptySelection, std::string("partition has no tokens in class '") + word_class_name(wc) + "'");
      r.rows.push_back({wc, js(first_[c], second_[c])});
    }
    return r;
  }

 private:
  void mark(std::size_t line, std::uint8_t group) {
    if (line == 0 || line >= membership_.size())
      throw Error(Errc::InvalidArgument, "partition line " + std::to_string(line) + " out of range");
    if (membership_[line] != 0) throw Error(Errc::InvalidArgument, "partition sets overlap at line " + std::to_string(line));
    membership_[line] = group;
  }

  std::vector<std::uint8_t> membership_;
  Side side_;
  WordClassMap classes_;
  bool with_classes_;
  std::array<VocabDistribution, 3> first_;
  std::array<VocabDistribution, 3> second_;
};

template <class Range>
DivergenceReport divergence_report(const Range& examples, const Partition& partition, Side side,
                                   const WordClassMap& classes = {}, bool with_classes = true) {
  std::size_t n = 0;
  for ([[maybe_unused]] const ParallelExample& ex : examples) ++n;
  DivergenceAccumulator acc(partition, n, side, classes, with_classes);
  std::size_t line = 0;
  for (const ParallelExample& ex : examples) acc.add(ex, ++line);
  return acc.report();
}

namespace detail {

// Unbiased draw in [0, bound) from a 64-bit engine; platform independent,
// unlike std::uniform_int_distribution.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

// Fisher-Yates permutation of [0, n) seeded deterministically.
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[bounded(rng, i)]);
  return perm;
}

}  // namespace detail

// Random partition of lines 1..n into floor(fraction*n) and the rest.
inline Partition random_split(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error(Errc::InvalidFraction, "fraction must be in (0, 1)");
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  const auto perm = detail::seeded_permutation(n, seed);
  Partition p;
  for (std::size_t i = 0; i < n; ++i) (i < k ? p.first : p.second).push_back(perm[i] + 1);
  std::sort(p.first.begin(), p.first.end());
  std::sort(p.second.begin(), p.second.end());
  return p;
}

}  // namespace covbias
