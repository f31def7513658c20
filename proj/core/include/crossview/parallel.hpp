#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace crossview {

/// Worker-thread cap: min(GFK_THREADS, hardware threads); 1 disables pooling.
inline int thread_cap() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("GFK_THREADS")) {
    const int requested = std::atoi(env);
    if (requested >= 1) {
      return std::min<int>(requested, static_cast<int>(hw));
    }
  }
  return static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, n). Each index writes only its own outputs, so the
/// result is identical to the serial loop regardless of thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const int threads = std::min<std::size_t>(thread_cap(), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace crossview
