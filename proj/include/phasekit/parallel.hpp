#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace phasekit {

namespace detail {
inline std::atomic<int>& thread_override() {
  static std::atomic<int> v{0};
  return v;
}
}  // namespace detail

// 0 restores the environment default
inline void set_thread_count(int n) { detail::thread_override() = n; }

inline int thread_count() {
  int o = detail::thread_override();
  if (o > 0) return o;
  if (const char* env = std::getenv("PHASEKIT_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs f(i) for i in [0, n). Callers write results to slot i and reduce in
// index order afterwards, so output never depends on the thread count.
template <class F>
void parallel_for(size_t n, F&& f) {
  size_t threads = std::min<size_t>(static_cast<size_t>(thread_count()), n);
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto worker = [&] {
    try {
      for (size_t i; (i = next.fetch_add(1)) < n;) f(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!err) err = std::current_exception();
      next = n;
    }
  };
  std::vector<std::thread> pool;
  for (size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace phasekit
