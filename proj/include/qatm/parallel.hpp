#pragma once

#include <cstddef>
#include <functional>

namespace qatm {

/// Number of worker threads used by the parallel kernels. Defaults to the
/// hardware concurrency; 0 restores that default.
void set_worker_count(unsigned workers);
unsigned worker_count();

/// Restores the previous worker count on scope exit.
class ScopedWorkerCount {
 public:
  explicit ScopedWorkerCount(unsigned workers) : previous_(worker_count()) {
    set_worker_count(workers);
  }
  ~ScopedWorkerCount() { set_worker_count(previous_); }
  ScopedWorkerCount(const ScopedWorkerCount&) = delete;
  ScopedWorkerCount& operator=(const ScopedWorkerCount&) = delete;

 private:
  unsigned previous_;
};

/// Splits [begin, end) into contiguous chunks, one per worker, and calls
/// body(lo, hi) for each. Chunk boundaries depend only on the range and the
/// worker count. Ranges shorter than min_chunk run inline.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 1);

}  // namespace qatm
