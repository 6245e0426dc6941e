#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace levyest {

//! Runs f(i) for i in [0, count) on up to `workers` threads. Work items are
//! claimed dynamically, but every result must be written to slot i by f, so
//! the caller's reduction runs in index order and output does not depend on
//! the worker count. The exception of the lowest failing index is rethrown.
template<class F>
void parallel_for(std::size_t count, int workers, F&& f)
{
  if (count == 0)
    return;
  std::size_t nthreads = std::clamp<std::size_t>(workers < 1 ? 1 : workers, 1, count);
  if (nthreads == 1) {
    for (std::size_t i = 0; i < count; ++i)
      f(i);
    return;
  }
  std::atomic<std::size_t> next{ 0 };
  std::mutex mtx;
  std::size_t err_index = count;
  std::exception_ptr err;
  auto body = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count)
        return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mtx);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nthreads; ++t)
    pool.emplace_back(body);
  body();
  for (auto& th : pool)
    th.join();
  if (err)
    std::rethrow_exception(err);
}

//! Worker count from an explicit value, else LEVYEST_WORKERS, else 1.
inline int resolve_workers(int requested)
{
  if (requested > 0)
    return requested;
  if (const char* env = std::getenv("LEVYEST_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0)
      return v;
  }
  return 1;
}

} // namespace levyest
