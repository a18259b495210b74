#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qsc {

/// Runs body(0..count-1) on up to `threads` workers. The first exception
/// thrown by any task is rethrown after all workers finish.
template <class Body>
void parallel_for(int count, int threads, Body&& body) {
  const int workers = std::clamp(threads, 1, std::max(count, 1));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace qsc
