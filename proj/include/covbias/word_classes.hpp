#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "covbias/corpus_io.hpp"
#include "covbias/error.hpp"

namespace covbias {

// Sectioned tag lists:
//
//   # comment
//   [content]
//   NOUN
//   VERB
//
// Blank lines and '#' comments are ignored; a tag outside a section is an error.
using TagSections = std::map<std::string, std::set<std::string>>;

inline TagSections parse_tag_sections(LineReader& in) {
  TagSections out;
  std::string line;
  std::string current;
  while (in.next(line)) {
    const auto tokens = split_tokens(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (tokens.size() != 1) throw Error(Errc::Format, "expected one tag per line in " + in.name(), in.line_no());
    const std::string& t = tokens.front();
    if (t.size() >= 2 && t.front() == '[' && t.back() == ']') {
      current = t.substr(1, t.size() - 2);
      if (current.empty()) throw Error(Errc::Format, "empty section name in " + in.name(), in.line_no());
      out[current];
      continue;
    }
    if (current.empty()) throw Error(Errc::Format, "tag outside of a [section] in " + in.name(), in.line_no());
    out[current].insert(t);
  }
  return out;
}

inline TagSections load_tag_sections(const std::filesystem::path& path) {
  LineReader in(path);
  return parse_tag_sections(in);
}

// Partition of POS tags into content and function words. Any tag outside
// the content set is a function tag.
class WordClassMap {
 public:
  WordClassMap() : content_{"NOUN", "VERB", "ADJ"} {}
  // An empty set is accepted: everything is then a function word.
  explicit WordClassMap(std::set<std::string> content) : content_(std::move(content)) {}

  static WordClassMap from_sections(const TagSections& sections) {
    auto it = sections.find("content");
    if (it == sections.end()) throw Error(Errc::Format, "word-class file has no [content] section");
    return WordClassMap(it->second);
  }

  static WordClassMap from_file(const std::filesystem::path& path) { return from_sections(load_tag_sections(path)); }

  bool is_content(std::string_view tag) const { return content_.find(std::string(tag)) != content_.end(); }
  const std::set<std::string>& content_tags() const { return content_; }

 private:
  std::set<std::string> content_;
};

}  // namespace covbias
