#pragma once

#include <exception>
#include <stdexcept>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace gaugeflow {

enum class Execution { Serial, Parallel };

// Runs body(i) for i in [0, n). The parallel path writes into per-index
// slots only, so outputs are identical to the serial path at any thread
// count; reductions over the slots stay in index order.
template <class Body>
void for_each_index(int n, Execution exec, Body&& body) {
  if (exec == Execution::Serial) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first_error = nullptr;
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#if defined(_OPENMP)
#pragma omp critical(gaugeflow_for_each_index)
#endif
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

inline int hardware_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_thread_count(int n) {
#if defined(_OPENMP)
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace gaugeflow
