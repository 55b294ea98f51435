#pragma once

#include <cstddef>

namespace lanecast {

// Global thread budget for every OpenMP region in the library.
// 1 means fully serial execution; 0 means "use the OpenMP default".
// All parallel code paths are written so that results are bit-identical
// to the serial reference for any thread count.
int max_threads();
void set_max_threads(int n);

// Number of threads a parallel region may actually use right now.
int effective_threads();

// Runs fn(i) for i in [0, n). Iterations must be independent; any
// cross-iteration reduction has to be done by the caller afterwards,
// in index order, so that the result does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn);

}  // namespace lanecast

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lanecast {

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
#ifdef _OPENMP
  const int threads = effective_threads();
  if (threads > 1 && n > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      fn(static_cast<std::size_t>(i));
    }
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace lanecast
