#include "defreg/parallel.hpp"

#include <cstdlib>
#include <string>

namespace defreg {

namespace {
int default_threads() {
#ifdef _OPENMP
  return omp_get_num_procs();
#else
  return 1;
#endif
}
}  // namespace

void set_thread_count(int threads) {
#ifdef _OPENMP
  omp_set_num_threads(threads < 1 ? default_threads() : threads);
#else
  (void)threads;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int resolve_thread_count(int requested) {
  if (const char* env = std::getenv("DEFREG_THREADS")) {
    try {
      int v = std::stoi(env);
      if (v > 0) return v;
    } catch (...) {
    }
  }
  return requested > 0 ? requested : default_threads();
}

}  // namespace defreg
