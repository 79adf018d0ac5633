#include "fgwas/parallel.hpp"

#include <thread>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace fgwas {

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#if defined(_OPENMP)
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace fgwas
