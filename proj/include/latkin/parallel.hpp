#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace latkin {

// Splits [0, n) into contiguous chunks run on up to `jobs` threads. Each index is
// handled by exactly one call of fn, so per-index outputs do not depend on jobs.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn, std::size_t min_chunk = 4096) {
  const std::size_t max_workers = n / std::max<std::size_t>(min_chunk, 1);
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)),
                                                    std::max<std::size_t>(max_workers, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace latkin
