#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sflow {

// Data-parallel experiment loops run either serially or with OpenMP.  The
// serial path is the reference: every parallel loop writes into
// per-iteration slots and reductions happen afterwards in index order, so
// both modes must produce bitwise-identical results.  Tests rely on that.
enum class ExecMode { serial, parallel };

inline int worker_count(ExecMode mode) {
#ifdef _OPENMP
  if (mode == ExecMode::parallel) return omp_get_max_threads();
#else
  (void)mode;
#endif
  return 1;
}

// Runs body(i) for i in [0, n).  Exceptions thrown by iterations are captured
// and the first one is rethrown after the loop joins (OpenMP may not let
// exceptions escape the parallel region).
template <typename Body>
void parallel_for(std::size_t n, ExecMode mode, Body&& body) {
#ifdef _OPENMP
  if (mode == ExecMode::parallel) {
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
    return;
  }
#endif
  (void)mode;
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace sflow
