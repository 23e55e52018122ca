#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <span>
#include <thread>
#include <type_traits>
#include <vector>

namespace covbias {

// Applies `fn` to every element using up to `threads` workers over
// contiguous chunks. Output order matches input order, so the result is
// identical for every thread count. The first exception (by chunk) is
// rethrown after all workers join.
template <class T, class Fn>
auto parallel_map(std::span<const T> items, unsigned threads, Fn fn) {
  using R = std::invoke_result_t<Fn&, const T&>;
  std::vector<R> out(items.size());
  const std::size_t n = items.size();
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(items[i]);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      pool.emplace_back([&, w, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) out[i] = fn(items[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace covbias
