#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

// Data-parallel loops over independent entries. Bodies must only write to
// state owned by their own index; reductions are done afterwards in fixed order.
namespace momt::detail {

/// Worker count. MOMT_THREADS caps it; 0 or unset means auto.
int worker_threads();

template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const long long n = static_cast<long long>(count);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (n > 256)
  for (long long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace momt::detail
