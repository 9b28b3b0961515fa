#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace defreg {

// Sets the OpenMP team size; values < 1 restore the runtime default.
void set_thread_count(int threads);
int thread_count();

// Honors DEFREG_THREADS when set, otherwise `requested`.
int resolve_thread_count(int requested);

}  // namespace defreg
