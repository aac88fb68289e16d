#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace p4rec::num {

// Runs fn(i) for i in [0, n). Work items must be independent; callers that
// need determinism should write results into per-index slots. num_threads
// <= 0 selects the hardware concurrency.
inline void parallel_for(int n, int num_threads, const std::function<void(int)>& fn) {
  if (num_threads <= 0) {
    num_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (num_threads <= 0) num_threads = 1;
  }
  num_threads = std::min(num_threads, n);
  if (num_threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(num_threads));
  std::atomic<bool> failed{false};
  for (int t = 0; t < num_threads; ++t) {
    pool.emplace_back([&]() {
      while (!failed.load()) {
        const int i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          failed.store(true);
          throw;  // terminates; worker exceptions are programming errors here
        }
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace p4rec::num
