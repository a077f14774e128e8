#pragma once

// Replica-level parallelism. Work is cut into fixed-size sample batches
// (independent of thread count); each batch draws from its own RNG stream
// and deposits results into a per-batch or per-thread slot. Integer
// statistics merge exactly in any order; double-valued partials are merged
// sequentially in batch order, so results are bit-identical for any
// thread count.

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace perclab {

inline constexpr uint64_t kDefaultBatch = 4096;

struct BatchRange {
  uint64_t task = 0;
  uint64_t begin = 0;  // global sample indices [begin, end)
  uint64_t end = 0;
};

inline uint64_t batch_count(uint64_t n_samples, uint64_t batch_size = kDefaultBatch) {
  return (n_samples + batch_size - 1) / batch_size;
}

// body(thread_slot, BatchRange) is invoked once per batch; thread_slot
// identifies the per-thread accumulator block the caller allocated.
template <typename Body>
inline void run_batches(uint64_t n_samples, int threads, Body&& body,
                        uint64_t batch_size = kDefaultBatch) {
  if (threads < 1) threads = 1;
  uint64_t n_tasks = batch_count(n_samples, batch_size);
  std::atomic<uint64_t> next{0};
  auto worker = [&](int slot) {
    for (;;) {
      uint64_t t = next.fetch_add(1);
      if (t >= n_tasks) break;
      BatchRange r;
      r.task = t;
      r.begin = t * batch_size;
      r.end = std::min(n_samples, r.begin + batch_size);
      body(slot, r);
    }
  };
  if (threads == 1) {
    worker(0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker, i);
  for (auto& th : pool) th.join();
}

}  // namespace perclab
