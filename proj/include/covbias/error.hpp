#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace covbias {

enum class Errc {
  Io,
  Format,
  InvalidUtf8,
  LineCountMismatch,
  EmptyLine,
  PosAlignment,
  InvalidArgument,
  EmptyCorpus,
  DegenerateVocabulary,
  SingleClassInput,
  EmptyInput,
  LengthMismatch,
  MissingPosAnnotations,
  EmptySelection,
  InvalidFraction,
  BucketMismatch,
  TagCollision,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::Io: return "IoError";
    case Errc::Format: return "FormatError";
    case Errc::InvalidUtf8: return "InvalidUtf8";
    case Errc::LineCountMismatch: return "LineCountMismatch";
    case Errc::EmptyLine: return "EmptyLine";
    case Errc::PosAlignment: return "PosAlignmentError";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::DegenerateVocabulary: return "DegenerateVocabulary";
    case Errc::SingleClassInput: return "SingleClassInput";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::MissingPosAnnotations: return "MissingPosAnnotations";
    case Errc::EmptySelection: return "EmptySelection";
    case Errc::InvalidFraction: return "InvalidFraction";
    case Errc::BucketMismatch: return "BucketMismatch";
    case Errc::TagCollision: return "TagCollision";
  }
  return "Error";
}

// Every failure raised by the library. `line()` is 1-based, 0 when the
// error is not tied to an input line.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::size_t line = 0)
      : std::runtime_error(format(code, message, line)), code_(code), line_(line) {}

  Errc code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

  // Usage-level errors map to exit status 1 in the CLI, everything else to 2.
  bool is_usage() const noexcept {
    return code_ == Errc::InvalidArgument || code_ == Errc::InvalidFraction;
  }

 private:
  static std::string format(Errc code, const std::string& message, std::size_t line) {
    std::string out(errc_name(code));
    if (line != 0) out += " at line " + std::to_string(line);
    if (!message.empty()) out += ": " + message;
    return out;
  }

  Errc code_;
  std::size_t line_;
};

}  // namespace covbias
