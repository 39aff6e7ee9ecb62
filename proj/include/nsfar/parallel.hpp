#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace nsfar {

namespace parallel_detail {
inline std::atomic<int>& thread_count() {
  static std::atomic<int> n{1};
  return n;
}
} // namespace parallel_detail

/// Worker count used by parallel_for; values < 1 select hardware concurrency.
inline void set_threads(int n) {
  if (n < 1) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  parallel_detail::thread_count() = n;
}

inline int threads() { return parallel_detail::thread_count(); }

/// Runs fn(i) for i in [begin, end) over contiguous chunks.  Each index is
/// visited exactly once, so results do not depend on the thread count.
template <class Fn>
void parallel_for(int begin, int end, Fn&& fn) {
  const int count = end - begin;
  const int workers = std::min(threads(), std::max(count, 1));
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + count * w / workers, hi = begin + count * (w + 1) / workers;
    pool.emplace_back([&, w, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

} // namespace nsfar
