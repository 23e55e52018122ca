#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "covbias/atomic_file.hpp"
#include "covbias/corpus_io.hpp"
#include "covbias/vocab_divergence.hpp"

namespace covbias::synthetic {

// Two toy languages that share sentence templates and function-word
// distributions but draw content words from different topic lexicons.
// Text authored in a language uses that language's native lexicon; its
// translation is a word-by-word substitution into the other language.
struct TestbedConfig {
  std::size_t lexicon_size = 300;
  double overlap = 0.2;  // fraction of each lexicon shared with the other
  std::size_t pairs_per_origin = 2000;
  std::size_t tuning_pairs = 500;
  std::size_t mono_lines = 10000;
  std::size_t heldout_mono_lines = 1000;
  double zipf_exponent = 1.0;
  std::uint64_t seed = 20210801;
};

struct TaggedSentence {
  Sentence text;
  PosAnnotation pos;
};

struct LabeledPair {
  ParallelExample example;  // POS on both sides, origin set
};

struct Testbed {
  std::vector<TaggedSentence> source_mono;
  std::vector<TaggedSentence> target_mono;
  std::vector<TaggedSentence> source_heldout;
  std::vector<TaggedSentence> target_heldout;
  // Target-language text translated into the source language: native
  // syntax, foreign topics. Used for the abstraction experiments.
  std::vector<TaggedSentence> source_translationese;
  std::vector<TaggedSentence> source_translationese_heldout;
  std::vector<ParallelExample> tuning;
  std::vector<ParallelExample> test;
};

enum class Lang { Source, Target };

namespace detail {

inline constexpr std::array<const char*, 3> kContentTags = {"NOUN", "VERB", "ADJ"};

struct FunctionClass {
  const char* tag;
  std::vector<const char*> source_forms;
  std::vector<const char*> target_forms;
};

inline const std::vector<FunctionClass>& function_classes() {
  static const std::vector<FunctionClass> classes = {
      {"DET", {"the", "a", "this", "that", "every"}, {"der", "ein", "dies", "jenes", "jeder"}},
      {"ADP", {"in", "on", "with", "for", "from", "near"}, {"im", "auf", "mit", "fuer", "von", "bei"}},
      {"PRON", {"he", "she", "they", "it", "we"}, {"er", "sie", "jene", "es", "wir"}},
      {"AUX", {"is", "was", "will", "can"}, {"ist", "war", "wird", "kann"}},
      {"CCONJ", {"and", "but", "or"}, {"und", "aber", "oder"}},
      {"PUNCT", {"."}, {"."}},
  };
  return classes;
}

// Sentence templates over POS tags, shared by both languages.
inline const std::vector<std::vector<std::string>>& templates() {
  static const std::vector<std::vector<std::string>> t = {
      {"DET", "ADJ", "NOUN", "VERB", "DET", "NOUN", "PUNCT"},
      {"PRON", "VERB", "DET", "NOUN", "ADP", "DET", "ADJ", "NOUN", "PUNCT"},
      {"DET", "NOUN", "AUX", "VERB", "ADP", "DET", "NOUN", "PUNCT"},
      {"DET", "NOUN", "CCONJ", "DET", "NOUN", "VERB", "ADJ", "NOUN", "PUNCT"},
      {"PRON", "AUX", "ADJ", "PUNCT"},
      {"ADP", "DET", "NOUN", "PRON", "VERB", "DET", "ADJ", "NOUN", "PUNCT"},
  };
  return t;
}

inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t draw(std::mt19937_64& rng, const std::vector<double>& cumulative) {
  const double u = unit(rng) * cumulative.back();
  return static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
}

// Pronounceable, collision-free surface form for concept `id`.
inline std::string surface(std::size_t id, Lang lang) {
  static const char* src_syl[] = {"ka", "lo", "mi", "ra", "te", "su", "no", "vi", "pa", "de", "go", "ben"};
  static const char* tgt_syl[] = {"xu", "zet", "qo", "wyn", "hax", "jul", "fer", "oz", "ik", "tsa", "yom", "bru"};
  const auto& syl = lang == Lang::Source ? src_syl : tgt_syl;
  std::string s;
  std::size_t v = id;
  do {
    s += syl[v % 12];
    v /= 12;
  } while (v > 0);
  s += lang == Lang::Source ? "a" : "u";
  return s;
}

}  // namespace detail

class Generator {
 public:
  explicit Generator(const TestbedConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
    const auto shared = static_cast<std::size_t>(std::llround(cfg.overlap * static_cast<double>(cfg.lexicon_size)));
    const std::size_t concepts = 2 * cfg.lexicon_size - shared;
    concept_tag_.resize(concepts);
    for (std::size_t c = 0; c < concepts; ++c) {
      // 50% nouns, 30% verbs, 20% adjectives.
      const std::size_t r = (c * 7919) % 10;
      concept_tag_[c] = r < 5 ? 0 : (r < 8 ? 1 : 2);
    }
    // Native lexicons: source owns [0, L), target owns [L - shared, 2L - shared).
    for (int lang = 0; lang < 2; ++lang) {
      const std::size_t begin = lang == 0 ? 0 : cfg.lexicon_size - shared;
      for (std::size_t tag = 0; tag < 3; ++tag) {
        auto& words = lexicon_[lang][tag];
        for (std::size_t c = begin; c < begin + cfg.lexicon_size; ++c)
          if (concept_tag_[c] == tag) words.push_back(c);
        // Rank order differs per language so shared concepts are not
        // equally frequent on both sides.
        std::mt19937_64 shuffle_rng(cfg.seed + 101 * lang + tag);
        for (std::size_t i = words.size(); i > 1; --i)
          std::swap(words[i - 1], words[covbias::detail::bounded(shuffle_rng, i)]);
        auto& cum = cumulative_[lang][tag];
        double acc = 0.0;
        for (std::size_t r = 0; r < words.size(); ++r) {
          acc += 1.0 / std::pow(static_cast<double>(r + 1), cfg.zipf_exponent);
          cum.push_back(acc);
        }
      }
    }
  }

  // A sentence authored in `lang`, as abstract tokens: concept ids for
  // content slots, function-word indices otherwise.
  struct Draft {
    std::vector<std::string> tags;
    std::vector<std::size_t> items;
  };

  Draft author(Lang lang) {
    const auto& ts = detail::templates();
    const auto& t = ts[covbias::detail::bounded(rng_, ts.size())];
    Draft d;
    d.tags = t;
    const int li = lang == Lang::Source ? 0 : 1;
    for (const auto& tag : t) {
      const auto ct = std::find(detail::kContentTags.begin(), detail::kContentTags.end(), tag);
      if (ct != detail::kContentTags.end()) {
        const auto k = static_cast<std::size_t>(ct - detail::kContentTags.begin());
        d.items.push_back(lexicon_[li][k][detail::draw(rng_, cumulative_[li][k])]);
      } else {
        const auto& fc = function_class(tag);
        d.items.push_back(covbias::detail::bounded(rng_, fc.source_forms.size()));
      }
    }
    return d;
  }

  TaggedSentence render(const Draft& d, Lang lang) const {
    TaggedSentence s;
    for (std::size_t i = 0; i < d.tags.size(); ++i) {
      const auto& tag = d.tags[i];
      if (std::find(detail::kContentTags.begin(), detail::kContentTags.end(), tag) != detail::kContentTags.end()) {
        s.text.tokens.push_back(detail::surface(d.items[i], lang));
      } else {
        const auto& fc = function_class(tag);
        s.text.tokens.emplace_back(lang == Lang::Source ? fc.source_forms[d.items[i]] : fc.target_forms[d.items[i]]);
      }
      s.pos.tags.push_back(tag);
    }
    return s;
  }

  // Authored in `origin`'s language and translated into the other one.
  ParallelExample pair(Lang origin) {
    const Draft d = author(origin);
    const auto src = render(d, Lang::Source);
    const auto tgt = render(d, Lang::Target);
    ParallelExample ex;
    ex.source = src.text;
    ex.target = tgt.text;
    ex.source_pos = src.pos;
    ex.target_pos = tgt.pos;
    ex.origin = origin == Lang::Source ? OriginLabel::SourceOriginal : OriginLabel::TargetOriginal;
    return ex;
  }

  std::vector<TaggedSentence> mono(Lang author_lang, Lang render_lang, std::size_t n) {
    std::vector<TaggedSentence> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(render(author(author_lang), render_lang));
    return out;
  }

  // Equal numbers of each origin, interleaved by a seeded permutation.
  std::vector<ParallelExample> pairs(std::size_t per_origin) {
    std::vector<ParallelExample> out;
    out.reserve(2 * per_origin);
    for (std::size_t i = 0; i < per_origin; ++i) out.push_back(pair(Lang::Source));
    for (std::size_t i = 0; i < per_origin; ++i) out.push_back(pair(Lang::Target));
    const auto perm = covbias::detail::seeded_permutation(out.size(), rng_());
    std::vector<ParallelExample> shuffled;
    shuffled.reserve(out.size());
    for (std::size_t i : perm) shuffled.push_back(std::move(out[i]));
    return shuffled;
  }

  Testbed build() {
    Testbed tb;
    tb.source_mono = mono(Lang::Source, Lang::Source, cfg_.mono_lines);
    tb.target_mono = mono(Lang::Target, Lang::Target, cfg_.mono_lines);
    tb.source_heldout = mono(Lang::Source, Lang::Source, cfg_.heldout_mono_lines);
    tb.target_heldout = mono(Lang::Target, Lang::Target, cfg_.heldout_mono_lines);
    tb.source_translationese = mono(Lang::Target, Lang::Source, cfg_.mono_lines);
    tb.source_translationese_heldout = mono(Lang::Target, Lang::Source, cfg_.heldout_mono_lines);
    tb.tuning = pairs(cfg_.tuning_pairs / 2);
    tb.test = pairs(cfg_.pairs_per_origin);
    return tb;
  }

 private:
  static const detail::FunctionClass& function_class(const std::string& tag) {
    for (const auto& fc : detail::function_classes())
      if (tag == fc.tag) return fc;
    throw Error(Errc::InvalidArgument, "unknown template tag " + tag);
  }

  TestbedConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> concept_tag_;
  std::array<std::array<std::vector<std::size_t>, 3>, 2> lexicon_;
  std::array<std::array<std::vector<double>, 3>, 2> cumulative_;
};

inline Testbed make_testbed(const TestbedConfig& cfg = {}) { return Generator(cfg).build(); }

inline std::vector<Sentence> texts(const std::vector<TaggedSentence>& s) {
  std::vector<Sentence> out;
  out.reserve(s.size());
  for (const auto& t : s) out.push_back(t.text);
  return out;
}

inline std::vector<PosAnnotation> tags(const std::vector<TaggedSentence>& s) {
  std::vector<PosAnnotation> out;
  out.reserve(s.size());
  for (const auto& t : s) out.push_back(t.pos);
  return out;
}

inline std::vector<OriginLabel> gold_labels(const std::vector<ParallelExample>& pairs) {
  std::vector<OriginLabel> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(*p.origin);
  return out;
}

inline void write_tagged(const std::vector<TaggedSentence>& s, const std::filesystem::path& text,
                         const std::filesystem::path& pos) {
  AtomicFile t(text), p(pos);
  for (const auto& x : s) {
    write_sentence(t.stream(), x.text);
    write_tokens(p.stream(), x.pos.tags);
  }
  t.commit();
  p.commit();
}

// STEM.src, STEM.tgt, STEM.src.pos, STEM.tgt.pos and STEM.gold.
inline void write_pairs(const std::vector<ParallelExample>& pairs, const std::filesystem::path& dir,
                        const std::string& stem) {
  AtomicFile src(dir / (stem + ".src")), tgt(dir / (stem + ".tgt"));
  AtomicFile src_pos(dir / (stem + ".src.pos")), tgt_pos(dir / (stem + ".tgt.pos"));
  AtomicFile gold(dir / (stem + ".gold"));
  for (const auto& ex : pairs) {
    write_sentence(src.stream(), ex.source);
    write_sentence(tgt.stream(), ex.target);
    write_tokens(src_pos.stream(), ex.source_pos->tags);
    write_tokens(tgt_pos.stream(), ex.target_pos->tags);
    gold.stream() << label_code(*ex.origin) << '\n';
  }
  for (auto* f : {&src, &tgt, &src_pos, &tgt_pos, &gold}) f->commit();
}

// Lays the testbed out as corpus files: mono.*, heldout.*, translated.src,
// tune.* and test.*.
inline void write_testbed(const Testbed& tb, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_tagged(tb.source_mono, dir / "mono.src", dir / "mono.src.pos");
  write_tagged(tb.target_mono, dir / "mono.tgt", dir / "mono.tgt.pos");
  write_tagged(tb.source_heldout, dir / "heldout.src", dir / "heldout.src.pos");
  write_tagged(tb.target_heldout, dir / "heldout.tgt", dir / "heldout.tgt.pos");
  write_tagged(tb.source_translationese, dir / "translated.src", dir / "translated.src.pos");
  write_tagged(tb.source_translationese_heldout, dir / "translated_heldout.src", dir / "translated_heldout.src.pos");
  write_pairs(tb.tuning, dir, "tune");
  write_pairs(tb.test, dir, "test");
}

}  // namespace covbias::synthetic
