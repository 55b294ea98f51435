#include "lanecast/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lanecast {

namespace {
std::atomic<int> g_max_threads{0};
}

int max_threads() { return g_max_threads.load(std::memory_order_relaxed); }

void set_max_threads(int n) {
  g_max_threads.store(n < 0 ? 0 : n, std::memory_order_relaxed);
}

int effective_threads() {
#ifdef _OPENMP
  if (omp_in_parallel()) return 1;  // no nested teams
  const int budget = max_threads();
  const int hw = omp_get_max_threads();
  if (budget == 0) return hw;
  return budget < hw ? budget : hw;
#else
  return 1;
#endif
}

}  // namespace lanecast
