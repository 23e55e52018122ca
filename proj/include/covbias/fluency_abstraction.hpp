#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covbias/atomic_file.hpp"
#include "covbias/corpus_io.hpp"
#include "covbias/error.hpp"
#include "covbias/ngram_lm.hpp"
#include "covbias/word_classes.hpp"

namespace covbias {

// Content words are replaced by prefix + TAG + suffix.
struct AbstractionRule {
  WordClassMap classes;
  std::string prefix;
  std::string suffix;

  AbstractionRule() = default;
  AbstractionRule(WordClassMap c, std::string pre = {}, std::string suf = {})
      : classes(std::move(c)), prefix(std::move(pre)), suffix(std::move(suf)) {
    for (const auto& part : {prefix, suffix})
      for (char ch : part)
        if (detail::is_space(ch)) throw Error(Errc::InvalidArgument, "tag rendering contains whitespace");
  }

  std::string render(const std::string& tag) const { return prefix + tag + suffix; }
};

inline Sentence abstract_sentence(const Sentence& sentence, const PosAnnotation& pos, const AbstractionRule& rule,
                                  std::size_t line_no = 0) {
  if (pos.size() != sentence.size())
    throw Error(Errc::PosAlignment,
                std::to_string(sentence.size()) + " tokens but " + std::to_string(pos.size()) + " tags", line_no);
  Sentence out;
  out.tokens.reserve(sentence.size());
  for (std::size_t i = 0; i < sentence.size(); ++i)
    out.tokens.push_back(rule.classes.is_content(pos.tags[i]) ? rule.render(pos.tags[i]) : sentence.tokens[i]);
  return out;
}

inline std::vector<Sentence> abstract_sentences(std::span<const Sentence> corpus, std::span<const PosAnnotation> pos,
                                                const AbstractionRule& rule) {
  if (corpus.size() != pos.size())
    throw Error(Errc::LineCountMismatch, std::to_string(corpus.size()) + " sentences vs " +
                                             std::to_string(pos.size()) + " annotation lines");
  std::vector<Sentence> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) out.push_back(abstract_sentence(corpus[i], pos[i], rule, i + 1));
  return out;
}

// Streams corpus + annotations line by line into `output`. Returns the line count.
inline std::size_t abstract_corpus(const std::filesystem::path& corpus, const std::filesystem::path& pos,
                                   const AbstractionRule& rule, const std::filesystem::path& output) {
  TokenLineReader text(corpus);
  TokenLineReader tags(pos);
  AtomicFile out(output);
  Sentence s;
  PosAnnotation p;
  std::size_t n = 0;
  for (;;) {
    const bool a = text.next(s.tokens);
    const bool b = tags.next(p.tags);
    if (!a && !b) break;
    ++n;
    if (a != b) throw Error(Errc::LineCountMismatch, "corpus and annotation line counts differ", n);
    write_sentence(out.stream(), abstract_sentence(s, p, rule, n));
  }
  out.commit();
  return n;
}

struct FluencyLevel {
  double ppl = 0.0;
  std::optional<double> relative_diff;  // (ppl - baseline) / baseline
};

struct FluencyReport {
  FluencyLevel plain;       // no abstraction
  FluencyLevel abstracted;  // content words abstracted
};

inline double relative_change(double value, double baseline) { return (value - baseline) / baseline; }

// Perplexity of system outputs before and after content abstraction.
// `abstracted_lm` must have been trained on text abstracted with `rule`.
template <SentenceScorer S>
FluencyReport fluency_report(std::span<const Sentence> outputs, std::span<const PosAnnotation> outputs_pos,
                             const S& abstracted_lm, const S& plain_lm, const AbstractionRule& rule,
                             const std::optional<FluencyReport>& baseline = std::nullopt) {
  const auto abstracted = abstract_sentences(outputs, outputs_pos, rule);
  FluencyReport r;
  r.plain.ppl = perplexity(plain_lm, outputs);
  r.abstracted.ppl = perplexity(abstracted_lm, abstracted);
  if (baseline) {
    r.plain.relative_diff = relative_change(r.plain.ppl, baseline->plain.ppl);
    r.abstracted.relative_diff = relative_change(r.abstracted.ppl, baseline->abstracted.ppl);
  }
  return r;
}

}  // namespace covbias
