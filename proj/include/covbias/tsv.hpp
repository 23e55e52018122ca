#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "covbias/corpus_io.hpp"
#include "covbias/error.hpp"

namespace covbias::tsv {

// 17 significant digits, enough to round-trip any finite double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(std::string_view s, std::size_t line = 0) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error(Errc::Format, "not a number: '" + std::string(s) + "'", line);
  return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::size_t line = 0) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw Error(Errc::Format, "not a non-negative integer: '" + std::string(s) + "'", line);
  return v;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((emit(cells, first)), ...);
    out_.put('\n');
  }

 private:
  void sep(bool& first) {
    if (!first) out_.put('\t');
    first = false;
  }
  void emit(double v, bool& first) {
    sep(first);
    out_ << format_double(v);
  }
  void emit(std::string_view s, bool& first) {
    sep(first);
    out_ << s;
  }
  void emit(const std::string& s, bool& first) { emit(std::string_view(s), first); }
  void emit(const char* s, bool& first) { emit(std::string_view(s), first); }
  void emit(char c, bool& first) {
    sep(first);
    out_.put(c);
  }
  template <class I>
    requires std::is_integral_v<I>
  void emit(I v, bool& first) {
    sep(first);
    out_ << v;
  }

  std::ostream& out_;
};

// Reader that checks the header row and the column count of every row.
// Line numbers count the header as line 1.
class Reader {
 public:
  Reader(const std::filesystem::path& path, std::vector<std::string> expected_header)
      : lines_(path), header_(std::move(expected_header)) {
    if (!lines_.next(buf_)) throw Error(Errc::Format, "missing header in " + path.string());
    const auto cells = split(buf_);
    if (cells.size() != header_.size() || !std::equal(cells.begin(), cells.end(), header_.begin()))
      throw Error(Errc::Format, "unexpected header in " + path.string() + ", want '" + joined() + "'", 1);
  }

  bool next(std::vector<std::string_view>& cells) {
    if (!lines_.next(buf_)) return false;
    cells = split(buf_);
    if (cells.size() != header_.size())
      throw Error(Errc::Format, "expected " + std::to_string(header_.size()) + " columns in " + lines_.name(),
                  lines_.line_no());
    return true;
  }

  std::size_t line_no() const { return lines_.line_no(); }

 private:
  std::string joined() const {
    std::string s;
    for (const auto& h : header_) s += (s.empty() ? "" : "\\t") + h;
    return s;
  }

  LineReader lines_;
  std::vector<std::string> header_;
  std::string buf_;
};

}  // namespace covbias::tsv
