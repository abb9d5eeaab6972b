#include "bayescond/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace bayescond {

int max_threads() {
  int n = omp_get_max_threads();
  if (const char* cap = std::getenv("BAYESCOND_THREADS")) {
    const int c = std::atoi(cap);
    if (c >= 1 && c < n) n = c;
  }
  return n;
}

void parallel_for(std::int64_t n, ExecPolicy policy, void* ctx,
                  void (*body)(void* ctx, std::int64_t i)) {
  if (policy == ExecPolicy::Serial) {
    for (std::int64_t i = 0; i < n; ++i) body(ctx, i);
    return;
  }
  const int nthreads = max_threads();
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (std::int64_t i = 0; i < n; ++i) body(ctx, i);
}

}  // namespace bayescond
