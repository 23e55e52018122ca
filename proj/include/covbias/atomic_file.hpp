#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>

#include "covbias/error.hpp"

namespace covbias {

// Output file that only appears at its final path once commit() succeeds.
// Data goes to a sibling temporary which is renamed over the destination;
// an uncommitted file is removed on destruction.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path)
      : path_(std::move(path)), tmp_(temp_name(path_)) {
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(Errc::Io, "cannot open for writing: " + path_.string());
  }

  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;

  ~AtomicFile() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  std::ostream& stream() { return out_; }
  const std::filesystem::path& path() const { return path_; }

  void commit() {
    out_.flush();
    if (!out_) throw Error(Errc::Io, "write failed: " + path_.string());
    out_.close();
    std::error_code ec;
    std::filesystem::rename(tmp_, path_, ec);
    if (ec) throw Error(Errc::Io, "cannot rename onto " + path_.string() + ": " + ec.message());
    committed_ = true;
  }

 private:
  static std::filesystem::path temp_name(const std::filesystem::path& p) {
    auto name = p.filename().string();
    return p.parent_path() / ("." + name + ".partial");
  }

  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

}  // namespace covbias
