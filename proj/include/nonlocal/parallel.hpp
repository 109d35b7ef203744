#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace nonlocal {

// Process-wide worker count used when a call does not pass one explicitly.
// Initialised from NONLOCAL_THREADS, falling back to hardware concurrency.
int default_threads();
void set_default_threads(int n);

// Static block partition of [0, n) over `threads` workers. `f(i)` must only
// write to state owned by index i.
template <typename F>
void parallel_for(std::int64_t n, F&& f, int threads = default_threads()) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::int64_t>(n, 1))));
  if (threads == 1) {
    for (std::int64_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    const std::int64_t lo = n * t / threads, hi = n * (t + 1) / threads;
    pool.emplace_back([lo, hi, &f] {
      for (std::int64_t i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace nonlocal
