#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace brwcap {

// Runs f(i) for i in [0, count) on up to `threads` workers. Work is handed
// out one index at a time; callers write into per-index slots and reduce in
// index order afterwards, which keeps results independent of scheduling.
// The first exception thrown by any f(i) is rethrown after all workers stop.
template <class F>
void parallel_for(std::int64_t count, int threads, F&& f) {
  if (threads <= 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  const auto n = static_cast<int>(std::min<std::int64_t>(threads, count));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline int default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace brwcap
