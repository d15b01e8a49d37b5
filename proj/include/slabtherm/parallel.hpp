#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace slabtherm {

/// Resolve a user-facing thread count (0 = hardware concurrency).
inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Static-partition parallel loop over [0, n).
///
/// Each index is handled by exactly one worker and `body(i)` must only write
/// to storage owned by index i, so results never depend on the worker count.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  unsigned workers = std::max(1u, std::min<unsigned>(resolve_threads(threads),
                                                     static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t lo = n * w / workers;
    std::size_t hi = n * (w + 1) / workers;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Like parallel_for, but hands each worker its contiguous index range
/// [lo, hi) so per-worker scratch space can be allocated once. The split
/// depends on the worker count; bodies must still keep results per index.
template <class Body>
void parallel_for_chunks(std::size_t n, unsigned threads, Body&& body) {
  unsigned workers = std::max(1u, std::min<unsigned>(resolve_threads(threads),
                                                     static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  parallel_for(workers, workers, [&](std::size_t w) {
    body(n * w / workers, n * (w + 1) / workers);
  });
}

}  // namespace slabtherm
