#pragma once

#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace adaocc {

// Worker pool size: ADAOCC_THREADS when set (clamped to [1, 64]), otherwise
// the hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("ADAOCC_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n > 64 ? 64 : n;
    return 1;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw > 64 ? 64 : hw);
}

// Runs fn(i) for i in [0, n) across the worker pool, each index handled
// exactly once. Deterministic as long as fn(i) writes only to slot i's data.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const int workers = worker_count();
  if (n == 0) return;
  if (workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (std::size_t w = 0; w < t; ++w) {
    const std::size_t lo = n * w / t;
    const std::size_t hi = n * (w + 1) / t;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace adaocc
