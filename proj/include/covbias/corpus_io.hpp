#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "covbias/atomic_file.hpp"
#include "covbias/error.hpp"

namespace covbias {

using Token = std::string;

struct Sentence {
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

struct PosAnnotation {
  std::vector<std::string> tags;

  std::size_t size() const { return tags.size(); }
  bool operator==(const PosAnnotation&) const = default;
};

enum class OriginLabel : std::uint8_t { SourceOriginal, TargetOriginal };

constexpr char label_code(OriginLabel label) {
  return label == OriginLabel::SourceOriginal ? 'S' : 'T';
}

inline OriginLabel parse_label(std::string_view text, std::size_t line = 0) {
  if (text == "S") return OriginLabel::SourceOriginal;
  if (text == "T") return OriginLabel::TargetOriginal;
  throw Error(Errc::Format, "origin label must be S or T, got '" + std::string(text) + "'", line);
}

struct ParallelExample {
  Sentence source;
  Sentence target;
  std::optional<PosAnnotation> source_pos;
  std::optional<PosAnnotation> target_pos;
  std::optional<double> score;
  std::optional<OriginLabel> origin;
};

namespace detail {

constexpr bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

// Strict UTF-8: rejects overlongs, surrogates and code points above U+10FFFF.
inline bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t len;
    std::uint32_t cp;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

}  // namespace detail

// Splits on runs of ASCII whitespace.
inline std::vector<Token> split_tokens(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && detail::is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !detail::is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline Sentence make_sentence(std::string_view line) { return Sentence{split_tokens(line)}; }

inline bool is_valid_token(std::string_view t) {
  if (t.empty()) return false;
  for (char c : t)
    if (detail::is_space(c)) return false;
  return true;
}

// Line source over a file or a caller-owned stream. Validates UTF-8 and
// counts lines from 1.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path)
      : owned_(std::make_unique<std::ifstream>(path, std::ios::binary)), in_(owned_.get()), name_(path.string()) {
    if (!*owned_) throw Error(Errc::Io, "cannot open " + name_);
  }
  LineReader(std::istream& in, std::string name) : in_(&in), name_(std::move(name)) {}

  // Returns false at end of input.
  bool next(std::string& line) {
    if (!std::getline(*in_, line)) {
      if (in_->bad()) throw Error(Errc::Io, "read failure in " + name_, line_no_ + 1);
      return false;
    }
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!detail::valid_utf8(line)) throw Error(Errc::InvalidUtf8, name_, line_no_);
    return true;
  }

  std::size_t line_no() const { return line_no_; }
  const std::string& name() const { return name_; }

 private:
  std::unique_ptr<std::ifstream> owned_;
  std::istream* in_;
  std::string name_;
  std::size_t line_no_ = 0;
};

// Tokenized line reader; blank lines are rejected.
class TokenLineReader {
 public:
  explicit TokenLineReader(const std::filesystem::path& path) : lines_(path) {}
  TokenLineReader(std::istream& in, std::string name) : lines_(in, std::move(name)) {}

  bool next(std::vector<std::string>& tokens) {
    if (!lines_.next(buf_)) return false;
    tokens = split_tokens(buf_);
    if (tokens.empty()) throw Error(Errc::EmptyLine, lines_.name(), lines_.line_no());
    return true;
  }

  std::size_t line_no() const { return lines_.line_no(); }
  const std::string& name() const { return lines_.name(); }

 private:
  LineReader lines_;
  std::string buf_;
};

class MonoReader {
 public:
  explicit MonoReader(const std::filesystem::path& path) : in_(path) {}
  MonoReader(std::istream& in, std::string name) : in_(in, std::move(name)) {}

  bool next(Sentence& s) { return in_.next(s.tokens); }
  std::size_t line_no() const { return in_.line_no(); }

 private:
  TokenLineReader in_;
};

inline std::vector<Sentence> read_mono(const std::filesystem::path& path) {
  MonoReader reader(path);
  std::vector<Sentence> out;
  Sentence s;
  while (reader.next(s)) out.push_back(std::move(s));
  return out;
}

inline std::vector<PosAnnotation> read_pos(const std::filesystem::path& path) {
  TokenLineReader reader(path);
  std::vector<PosAnnotation> out;
  PosAnnotation p;
  while (reader.next(p.tags)) out.push_back(std::move(p));
  return out;
}

struct ParallelPaths {
  std::filesystem::path source;
  std::filesystem::path target;
  std::optional<std::filesystem::path> source_pos;
  std::optional<std::filesystem::path> target_pos;
};

// Reads up to four line-aligned files in lock step. Memory is bounded by
// the current line of each file.
class ParallelReader {
 public:
  explicit ParallelReader(const ParallelPaths& paths) : src_(paths.source), tgt_(paths.target) {
    if (paths.source_pos) src_pos_.emplace(*paths.source_pos);
    if (paths.target_pos) tgt_pos_.emplace(*paths.target_pos);
  }

  bool next(ParallelExample& ex) {
    ex.score.reset();
    ex.origin.reset();
    const bool has_src = src_.next(ex.source.tokens);
    const bool has_tgt = tgt_.next(ex.target.tokens);
    bool all_present = has_src && has_tgt;
    bool any_present = has_src || has_tgt;
    auto step_pos = [&](std::optional<TokenLineReader>& reader, std::optional<PosAnnotation>& slot) {
      if (!reader) {
        slot.reset();
        return;
      }
      if (!slot) slot.emplace();
      const bool has = reader->next(slot->tags);
      all_present = all_present && has;
      any_present = any_present || has;
    };
    step_pos(src_pos_, ex.source_pos);
    step_pos(tgt_pos_, ex.target_pos);
    if (!any_present) return false;
    ++line_no_;
    if (!all_present) throw Error(Errc::LineCountMismatch, "input files have different line counts", line_no_);
    if (ex.source_pos && ex.source_pos->size() != ex.source.size())
      throw Error(Errc::PosAlignment, pos_message("source", ex.source.size(), ex.source_pos->size()), line_no_);
    if (ex.target_pos && ex.target_pos->size() != ex.target.size())
      throw Error(Errc::PosAlignment, pos_message("target", ex.target.size(), ex.target_pos->size()), line_no_);
    return true;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  static std::string pos_message(const char* side, std::size_t tokens, std::size_t tags) {
    return std::string(side) + " has " + std::to_string(tokens) + " tokens but " + std::to_string(tags) + " tags";
  }

  TokenLineReader src_;
  TokenLineReader tgt_;
  std::optional<TokenLineReader> src_pos_;
  std::optional<TokenLineReader> tgt_pos_;
  std::size_t line_no_ = 0;
};

inline std::vector<ParallelExample> read_parallel(const ParallelPaths& paths) {
  ParallelReader reader(paths);
  std::vector<ParallelExample> out;
  ParallelExample ex;
  while (reader.next(ex)) out.push_back(ex);
  return out;
}

inline void write_tokens(std::ostream& out, const std::vector<std::string>& tokens) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.put(' ');
    out << tokens[i];
  }
  out.put('\n');
}

inline void write_sentence(std::ostream& out, const Sentence& s) { write_tokens(out, s.tokens); }

class ParallelWriter {
 public:
  ParallelWriter(const std::filesystem::path& src, const std::filesystem::path& tgt) : src_(src), tgt_(tgt) {}

  void write(const ParallelExample& ex) {
    write_sentence(src_.stream(), ex.source);
    write_sentence(tgt_.stream(), ex.target);
  }

  void commit() {
    src_.commit();
    tgt_.commit();
  }

 private:
  AtomicFile src_;
  AtomicFile tgt_;
};

template <class Range>
void write_parallel(const Range& examples, const std::filesystem::path& src, const std::filesystem::path& tgt) {
  ParallelWriter writer(src, tgt);
  for (const ParallelExample& ex : examples) writer.write(ex);
  writer.commit();
}

template <class Range>
void write_mono(const Range& sentences, const std::filesystem::path& path) {
  AtomicFile out(path);
  for (const Sentence& s : sentences) write_sentence(out.stream(), s);
  out.commit();
}

}  // namespace covbias
