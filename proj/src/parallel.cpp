#include "parallel.hpp"

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace momt::detail {

int worker_threads() {
  static const int threads = [] {
    int available = 1;
#ifdef _OPENMP
    available = omp_get_max_threads();
#endif
    const char* env = std::getenv("MOMT_THREADS");
    if (env == nullptr) return available;
    const int cap = std::atoi(env);
    if (cap <= 0) return available;
    return cap < available ? cap : available;
  }();
  return threads;
}

}  // namespace momt::detail
