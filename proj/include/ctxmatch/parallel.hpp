#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ctxmatch {

// 0 means "all hardware threads".
inline std::size_t resolve_threads(std::size_t requested) {
  if (requested != 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Calls fn(i) for i in [0, n) on up to `threads` workers. Callers write into
// slot i of a pre-sized output, so results never depend on scheduling. If
// several calls throw, the exception of the lowest index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  const std::size_t workers = std::min(resolve_threads(threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = n;
  std::exception_ptr error;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (i < error_index) {
              error_index = i;
              error = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace ctxmatch
