#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "covbias/atomic_file.hpp"
#include "covbias/corpus_io.hpp"
#include "covbias/error.hpp"

namespace covbias {

struct LmScore {
  double total_logprob = 0.0;  // nats
  std::size_t token_count = 0;  // predicted events, </s> included

  double per_token() const { return total_logprob / static_cast<double>(token_count); }
};

// Anything that can assign a log-probability to a sentence can drive
// origin detection.
template <class S>
concept SentenceScorer = requires(const S& scorer, const Sentence& s) {
  { scorer.score(s) } -> std::convertible_to<LmScore>;
};

struct TrainOptions {
  int order = 4;
  std::uint64_t min_count = 2;
};

namespace detail {

inline constexpr int kMaxOrder = 6;
inline constexpr std::uint32_t kNoWord = 0xFFFFFFFFu;

struct NGramKey {
  std::array<std::uint32_t, kMaxOrder> ids;

  NGramKey() { ids.fill(kNoWord); }
  explicit NGramKey(std::span<const std::uint32_t> words) : NGramKey() {
    std::copy(words.begin(), words.end(), ids.begin());
  }

  std::size_t length() const {
    return static_cast<std::size_t>(std::find(ids.begin(), ids.end(), kNoWord) - ids.begin());
  }
  std::span<const std::uint32_t> words() const { return {ids.data(), length()}; }

  bool operator==(const NGramKey&) const = default;
  auto operator<=>(const NGramKey&) const = default;
};

struct NGramKeyHash {
  std::size_t operator()(const NGramKey& k) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint32_t id : k.ids) {
      h ^= id;
      h *= 0x100000001b3ull;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

template <class V>
using NGramMap = std::unordered_map<NGramKey, V, NGramKeyHash>;

// Little-endian fixed-width encoding for the model file.
class ByteWriter {
 public:
  template <std::unsigned_integral U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void put_f64(double d) { put(std::bit_cast<std::uint64_t>(d)); }
  void put_bytes(std::string_view s) { buf_.append(s); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  template <std::unsigned_integral U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(Errc::Format, "truncated model file");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Interpolated Kneser-Ney n-gram model stored in backoff form: every
// observed n-gram keeps its fully interpolated log-probability, and every
// observed context keeps the log of the mass it hands to the next lower
// order. Unseen contexts back off with weight one. Immutable once built.
class NGramModel {
 public:
  using WordId = std::uint32_t;

  static constexpr WordId kUnk = 0;
  static constexpr WordId kBos = 1;
  static constexpr WordId kEos = 2;
  static constexpr std::uint16_t kFormatVersion = 1;
  static constexpr int kMaxOrder = detail::kMaxOrder;
  static constexpr char kMagic[4] = {'N', 'G', 'L', 'M'};

  template <class Range>
  static NGramModel train(const Range& corpus, const TrainOptions& opts);

  static NGramModel train_file(const std::filesystem::path& path, const TrainOptions& opts) {
    return train(read_mono(path), opts);
  }

  LmScore score(const Sentence& sentence) const {
    const std::size_t hist = static_cast<std::size_t>(order_ - 1);
    std::vector<WordId> seq(hist, kBos);
    seq.reserve(hist + sentence.size() + 1);
    for (const auto& tok : sentence.tokens) seq.push_back(lookup(tok));
    seq.push_back(kEos);
    LmScore out;
    for (std::size_t i = hist; i < seq.size(); ++i) {
      out.total_logprob += conditional_logprob({seq.data() + i - hist, hist}, seq[i]);
    }
    out.token_count = sentence.size() + 1;
    return out;
  }

  // log P(word | history) with the history truncated to order-1 words.
  double conditional_logprob(std::span<const WordId> history, WordId word) const {
    if (history.size() > static_cast<std::size_t>(order_ - 1))
      history = history.subspan(history.size() - static_cast<std::size_t>(order_ - 1));
    double backoff = 0.0;
    for (std::size_t level = history.size() + 1; level >= 1; --level) {
      auto ctx = history.subspan(history.size() - (level - 1));
      detail::NGramKey key(ctx);
      key.ids[level - 1] = word;
      const auto& probs = logprob_[level - 1];
      if (auto it = probs.find(key); it != probs.end()) return backoff + it->second;
      if (level > 1) {
        const auto& bos = backoff_[level - 1];
        if (auto bit = bos.find(detail::NGramKey(ctx)); bit != bos.end()) backoff += bit->second;
      }
    }
    throw Error(Errc::Format, "word id " + std::to_string(word) + " has no unigram entry");
  }

  WordId lookup(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? kUnk : it->second;
  }

  int order() const { return order_; }
  std::uint64_t min_count() const { return min_count_; }
  std::uint64_t training_tokens() const { return training_tokens_; }
  const std::vector<double>& discounts() const { return discounts_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }

  // Word ids that can be predicted, i.e. everything except <s>.
  std::vector<WordId> predictable_ids() const {
    std::vector<WordId> out;
    for (WordId i = 0; i < vocab_.size(); ++i)
      if (i != kBos) out.push_back(i);
    return out;
  }

  // Contexts (length level-1) that carry an explicit distribution at `level`.
  std::vector<std::vector<WordId>> contexts(int level) const {
    std::vector<std::vector<WordId>> out;
    for (const auto& [key, _] : backoff_.at(static_cast<std::size_t>(level - 1))) {
      auto w = key.words();
      out.emplace_back(w.begin(), w.end());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t entry_count(int level) const { return logprob_.at(static_cast<std::size_t>(level - 1)).size(); }

  std::string serialize() const;
  static NGramModel deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const {
    AtomicFile out(path);
    const std::string bytes = serialize();
    out.stream().write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.commit();
  }

  static NGramModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open model " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(Errc::Io, "read failure in " + path.string());
    return deserialize(bytes);
  }

 private:
  NGramModel() = default;

  void index_vocabulary() {
    ids_.clear();
    for (WordId i = 0; i < vocab_.size(); ++i)
      if (i > kEos) ids_.emplace(vocab_[i], i);
  }

  int order_ = 0;
  std::uint64_t min_count_ = 1;
  std::uint64_t training_tokens_ = 0;
  std::vector<double> discounts_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, WordId> ids_;
  // Indexed by level-1. logprob_ keys are full n-grams, backoff_ keys contexts.
  std::vector<detail::NGramMap<double>> logprob_;
  std::vector<detail::NGramMap<double>> backoff_;
};

inline LmScore logprob(const NGramModel& model, const Sentence& sentence) { return model.score(sentence); }

template <SentenceScorer S, class Range>
double perplexity(const S& model, const Range& corpus) {
  double total = 0.0;
  std::size_t count = 0;
  for (const Sentence& s : corpus) {
    const LmScore sc = model.score(s);
    total += sc.total_logprob;
    count += sc.token_count;
  }
  if (count == 0) throw Error(Errc::EmptyCorpus, "perplexity needs at least one sentence");
  return std::exp(-total / static_cast<double>(count));
}

namespace detail {

// D = n1 / (n1 + 2 n2) from counts-of-counts; 0.75 when either is zero.
template <class Map>
double kn_discount(const Map& counts) {
  std::uint64_t n1 = 0, n2 = 0;
  for (const auto& [_, c] : counts) {
    if (c == 1) ++n1;
    else if (c == 2) ++n2;
  }
  if (n1 == 0 || n2 == 0) return 0.75;
  return static_cast<double>(n1) / (static_cast<double>(n1) + 2.0 * static_cast<double>(n2));
}

}  // namespace detail

template <class Range>
NGramModel NGramModel::train(const Range& corpus, const TrainOptions& opts) {
  if (opts.order < 1 || opts.order > kMaxOrder)
    throw Error(Errc::InvalidArgument, "order must be in [1," + std::to_string(kMaxOrder) + "]");
  if (opts.min_count < 1) throw Error(Errc::InvalidArgument, "min_count must be >= 1");

  // Intern surface forms, keeping the corpus as raw ids for the second pass.
  std::unordered_map<std::string, std::uint32_t> raw_ids;
  std::vector<std::string_view> raw_words;
  std::vector<std::uint64_t> raw_freq;
  std::vector<std::uint32_t> flat;
  std::vector<std::size_t> offsets{0};
  for (const Sentence& s : corpus) {
    for (const auto& tok : s.tokens) {
      auto [it, inserted] = raw_ids.try_emplace(tok, static_cast<std::uint32_t>(raw_words.size()));
      if (inserted) {
        raw_words.push_back(it->first);
        raw_freq.push_back(0);
      }
      ++raw_freq[it->second];
      flat.push_back(it->second);
    }
    offsets.push_back(flat.size());
  }
  if (offsets.size() == 1) throw Error(Errc::EmptyCorpus, "training corpus has no sentences");

  auto reserved = [](std::string_view w) { return w == "<unk>" || w == "<s>" || w == "</s>"; };
  std::vector<std::string> survivors;
  for (std::size_t i = 0; i < raw_words.size(); ++i)
    if (raw_freq[i] >= opts.min_count && !reserved(raw_words[i])) survivors.emplace_back(raw_words[i]);
  std::sort(survivors.begin(), survivors.end());
  if (survivors.size() + 1 < 2)
    throw Error(Errc::DegenerateVocabulary, "fewer than 2 word types survive min_count=" + std::to_string(opts.min_count));

  NGramModel m;
  m.order_ = opts.order;
  m.min_count_ = opts.min_count;
  m.vocab_ = {"<unk>", "<s>", "</s>"};
  m.vocab_.insert(m.vocab_.end(), survivors.begin(), survivors.end());
  m.index_vocabulary();

  std::vector<WordId> remap(raw_words.size());
  for (std::size_t i = 0; i < raw_words.size(); ++i) remap[i] = m.lookup(raw_words[i]);

  const auto n = static_cast<std::size_t>(opts.order);
  std::vector<detail::NGramMap<std::uint64_t>> counts(n);

  // Highest order: raw counts of every predicted event with full history.
  std::vector<WordId> seq;
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    seq.assign(n - 1, kBos);
    for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) seq.push_back(remap[flat[i]]);
    seq.push_back(kEos);
    for (std::size_t i = n - 1; i < seq.size(); ++i) ++counts[n - 1][detail::NGramKey({seq.data() + i - (n - 1), n})];
    m.training_tokens_ += offsets[s + 1] - offsets[s] + 1;
  }

  // Lower orders: continuation counts, i.e. distinct left extensions.
  for (std::size_t level = n - 1; level >= 1; --level) {
    for (const auto& [key, _] : counts[level]) {
      auto w = key.words();
      ++counts[level - 1][detail::NGramKey(w.subspan(1))];
    }
  }

  m.discounts_.resize(n);
  m.logprob_.assign(n, {});
  m.backoff_.assign(n, {});

  // Unigrams: interpolate with the uniform distribution over predictable words.
  {
    const auto& c1 = counts[0];
    const double d = detail::kn_discount(c1);
    m.discounts_[0] = d;
    double total = 0.0;
    for (const auto& [_, c] : c1) total += static_cast<double>(c);
    const double gamma = d * static_cast<double>(c1.size()) / total;
    const auto predictable = m.predictable_ids();
    const double uniform = 1.0 / static_cast<double>(predictable.size());
    for (WordId w : predictable) {
      const WordId ids[1] = {w};
      detail::NGramKey key(ids);
      double c = 0.0;
      if (auto it = c1.find(key); it != c1.end()) c = static_cast<double>(it->second);
      const double p = std::max(c - d, 0.0) / total + gamma * uniform;
      m.logprob_[0].emplace(key, std::log(p));
    }
    m.backoff_[0].emplace(detail::NGramKey(), std::log(gamma));
  }

  for (std::size_t level = 2; level <= n; ++level) {
    const auto& ck = counts[level - 1];
    const double d = detail::kn_discount(ck);
    m.discounts_[level - 1] = d;
    detail::NGramMap<std::pair<std::uint64_t, std::uint64_t>> ctx;  // total, distinct followers
    for (const auto& [key, c] : ck) {
      auto& slot = ctx[detail::NGramKey(key.words().first(level - 1))];
      slot.first += c;
      slot.second += 1;
    }
    auto& bo = m.backoff_[level - 1];
    for (const auto& [key, tc] : ctx)
      bo.emplace(key, std::log(d * static_cast<double>(tc.second) / static_cast<double>(tc.first)));
    const auto& lower = m.logprob_[level - 2];
    auto& lp = m.logprob_[level - 1];
    for (const auto& [key, c] : ck) {
      auto w = key.words();
      const auto& tc = ctx.at(detail::NGramKey(w.first(level - 1)));
      const double total = static_cast<double>(tc.first);
      const double gamma = d * static_cast<double>(tc.second) / total;
      const double p_lower = std::exp(lower.at(detail::NGramKey(w.subspan(1))));
      const double p = std::max(static_cast<double>(c) - d, 0.0) / total + gamma * p_lower;
      lp.emplace(key, std::log(p));
    }
  }
  return m;
}

// Layout (little-endian): "NGLM", u16 version, u16 order, u32 vocab size,
// (u32 length + bytes) per word, then per level a u64 entry count followed
// by entries sorted by (context ids, word id): u32 ids..., f64 logprob,
// f64 log backoff of the entry's context. Trailer: u64 training tokens,
// u64 min_count, f64 discount per level.
inline std::string NGramModel::serialize() const {
  detail::ByteWriter w;
  w.put_bytes({kMagic, 4});
  w.put(kFormatVersion);
  w.put(static_cast<std::uint16_t>(order_));
  w.put(static_cast<std::uint32_t>(vocab_.size()));
  for (const auto& word : vocab_) {
    w.put(static_cast<std::uint32_t>(word.size()));
    w.put_bytes(word);
  }
  for (std::size_t level = 1; level <= static_cast<std::size_t>(order_); ++level) {
    const auto& lp = logprob_[level - 1];
    std::vector<const std::pair<const detail::NGramKey, double>*> entries;
    entries.reserve(lp.size());
    for (const auto& e : lp) entries.push_back(&e);
    std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return a->first < b->first; });
    w.put(static_cast<std::uint64_t>(entries.size()));
    for (const auto* e : entries) {
      auto ids = e->first.words();
      for (WordId id : ids) w.put(id);
      w.put_f64(e->second);
      w.put_f64(backoff_[level - 1].at(detail::NGramKey(ids.first(level - 1))));
    }
  }
  w.put(training_tokens_);
  w.put(min_count_);
  for (double d : discounts_) w.put_f64(d);
  return w.bytes();
}

inline NGramModel NGramModel::deserialize(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.get_bytes(4) != std::string_view(kMagic, 4)) throw Error(Errc::Format, "bad magic, not an NGLM model");
  const auto version = r.get<std::uint16_t>();
  if (version != kFormatVersion)
    throw Error(Errc::Format, "unsupported model format version " + std::to_string(version) +
                                  " (this build reads version " + std::to_string(kFormatVersion) + ")");
  NGramModel m;
  m.order_ = r.get<std::uint16_t>();
  if (m.order_ < 1 || m.order_ > kMaxOrder) throw Error(Errc::Format, "invalid order " + std::to_string(m.order_));
  const auto vsize = r.get<std::uint32_t>();
  if (vsize < 4) throw Error(Errc::Format, "vocabulary too small");
  m.vocab_.reserve(vsize);
  for (std::uint32_t i = 0; i < vsize; ++i) {
    const auto len = r.get<std::uint32_t>();
    m.vocab_.emplace_back(r.get_bytes(len));
  }
  if (m.vocab_[kUnk] != "<unk>" || m.vocab_[kBos] != "<s>" || m.vocab_[kEos] != "</s>")
    throw Error(Errc::Format, "reserved vocabulary entries missing");
  m.index_vocabulary();
  const auto n = static_cast<std::size_t>(m.order_);
  m.logprob_.assign(n, {});
  m.backoff_.assign(n, {});
  for (std::size_t level = 1; level <= n; ++level) {
    const auto count = r.get<std::uint64_t>();
    for (std::uint64_t e = 0; e < count; ++e) {
      std::array<WordId, kMaxOrder> ids{};
      for (std::size_t k = 0; k < level; ++k) {
        ids[k] = r.get<std::uint32_t>();
        if (ids[k] >= vsize) throw Error(Errc::Format, "word id out of range");
      }
      const double lp = r.get_f64();
      const double bo = r.get_f64();
      if (!std::isfinite(lp) || lp > 0.0) throw Error(Errc::Format, "invalid log-probability");
      std::span<const WordId> words(ids.data(), level);
      m.logprob_[level - 1].emplace(detail::NGramKey(words), lp);
      m.backoff_[level - 1].emplace(detail::NGramKey(words.first(level - 1)), bo);
    }
  }
  if (m.logprob_[0].size() != vsize - 1) throw Error(Errc::Format, "unigram table incomplete");
  m.training_tokens_ = r.get<std::uint64_t>();
  m.min_count_ = r.get<std::uint64_t>();
  m.discounts_.resize(n);
  for (auto& d : m.discounts_) d = r.get_f64();
  if (!r.at_end()) throw Error(Errc::Format, "trailing bytes after model");
  return m;
}

}  // namespace covbias
