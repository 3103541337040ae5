#pragma once

#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cemwave {

/// Static-chunked parallel loop over [0, n). Each index must write only its
/// own output slot; the first exception thrown by any worker is rethrown.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  const unsigned hw = std::thread::hardware_concurrency();
  const int workers = static_cast<int>(std::min<unsigned>(hw ? hw : 1, static_cast<unsigned>(n)));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr err;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

} // namespace cemwave
