#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace qflow {

// Worker count for per-point loops; results never depend on it.
void set_thread_count(int threads);
int thread_count();

// Runs body(begin, end) over contiguous blocks of [0, count).  The first
// exception thrown by any block is rethrown on the calling thread.
template <typename Body> void parallel_for(std::ptrdiff_t count, Body&& body) {
  const int workers = std::min<std::ptrdiff_t>(thread_count(), std::max<std::ptrdiff_t>(count / 64, 1));
  if (workers <= 1) {
    body(std::ptrdiff_t(0), count);
    return;
  }
  std::exception_ptr error;
  std::mutex m;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    const std::ptrdiff_t begin = count * w / workers, end = count * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

} // namespace qflow
