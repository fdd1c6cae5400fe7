#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace iuq {

/// Runs body(i) for i in [0, count) on the OpenMP team. Nested calls run
/// serially inside an enclosing parallel region. The first exception thrown by
/// any iteration is rethrown after the loop.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

inline void set_thread_count(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
  omp_set_max_active_levels(1);
#else
  (void)threads;
#endif
}

}  // namespace iuq
