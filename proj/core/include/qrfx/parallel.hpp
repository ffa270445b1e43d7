#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace qrfx {

// Worker cap: --threads flag or QRFX_THREADS, else hardware concurrency.
// Affects speed only; all results are written to index-addressed slots.
inline int& thread_cap() {
  static int cap = [] {
    if (const char* env = std::getenv("QRFX_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
  }();
  return cap;
}

// Runs fn(i) for i in [0, n) across worker threads. fn must only write
// state owned by index i.
inline bool& in_parallel_region() {
  thread_local bool inside = false;
  return inside;
}

inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  int workers = thread_cap();
  // Nested calls run serially; only the outermost loop fans out.
  if (workers <= 1 || n <= 1 || in_parallel_region()) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  pool.reserve(count);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < count; ++t) {
    pool.emplace_back([&] {
      in_parallel_region() = true;
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n);
          break;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace qrfx
