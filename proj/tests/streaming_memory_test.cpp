// Checks that the line-aligned reader and the streaming abstraction keep
// memory bounded by the longest line, not the file size. Global operator
// new is replaced to track live heap bytes.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <new>

#include "covbias/corpus_io.hpp"
#include "covbias/fluency_abstraction.hpp"

namespace {

std::atomic<std::size_t> live{0};
std::atomic<std::size_t> peak{0};

void* track(std::size_t n) {
  void* p = std::malloc(n + 16);
  if (!p) throw std::bad_alloc();
  *static_cast<std::size_t*>(p) = n;
  const auto now = live.fetch_add(n) + n;
  auto old = peak.load();
  while (now > old && !peak.compare_exchange_weak(old, now)) {
  }
  return static_cast<char*>(p) + 16;
}

void untrack(void* p) {
  if (!p) return;
  char* base = static_cast<char*>(p) - 16;
  live.fetch_sub(*reinterpret_cast<std::size_t*>(base));
  std::free(base);
}

}  // namespace

void* operator new(std::size_t n) { return track(n); }
void* operator new[](std::size_t n) { return track(n); }
void operator delete(void* p) noexcept { untrack(p); }
void operator delete[](void* p) noexcept { untrack(p); }
void operator delete(void* p, std::size_t) noexcept { untrack(p); }
void operator delete[](void* p, std::size_t) noexcept { untrack(p); }

int main() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "covbias-streaming-memory";
  fs::create_directories(dir);
  const std::size_t lines = 200000;
  {
    std::ofstream s(dir / "s"), t(dir / "t"), p(dir / "p");
    for (std::size_t i = 0; i < lines; ++i) {
      s << "the quick brown fox jumps over the lazy dog number " << i << '\n';
      t << "der schnelle braune fuchs springt ueber den faulen hund nummer " << i << '\n';
      p << "DET ADJ ADJ NOUN VERB ADP DET ADJ NOUN NOUN NUM\n";
    }
  }
  const auto file_bytes = fs::file_size(dir / "s") + fs::file_size(dir / "t") + fs::file_size(dir / "p");

  int failures = 0;
  auto check = [&](const char* what, std::size_t bound) {
    const auto used = peak.load();
    const bool ok = used < bound;
    std::printf("%s %s: peak heap %zu bytes (bound %zu, inputs %ju bytes)\n", ok ? "PASS" : "FAIL", what, used, bound,
                static_cast<std::uintmax_t>(file_bytes));
    failures += !ok;
  };

  const std::size_t bound = 1 << 20;  // input is ~30 MB
  peak = live.load();
  {
    covbias::ParallelReader reader({dir / "s", dir / "t", dir / "p", {}});
    covbias::ParallelExample ex;
    std::size_t n = 0;
    while (reader.next(ex)) ++n;
    if (n != lines) ++failures;
  }
  check("parallel reader", live.load() + bound);

  peak = live.load();
  covbias::abstract_corpus(dir / "s", dir / "p", covbias::AbstractionRule{covbias::WordClassMap()}, dir / "out");
  check("abstract_corpus", live.load() + bound);

  fs::remove_all(dir);
  return failures == 0 ? 0 : 1;
}
