#pragma once

#include <cstdint>

namespace bayescond {

enum class ExecPolicy { Serial, OpenMP };

// omp_get_max_threads() capped by the BAYESCOND_THREADS env var.
int max_threads();

// Index-parallel loop.  Bodies must write only to disjoint slots so that
// Serial and OpenMP policies produce bit-identical results.
void parallel_for(std::int64_t n, ExecPolicy policy, void* ctx,
                  void (*body)(void* ctx, std::int64_t i));

template <typename F>
void parallel_for(std::int64_t n, ExecPolicy policy, F&& body) {
  parallel_for(n, policy, static_cast<void*>(&body), [](void* ctx, std::int64_t i) {
    (*static_cast<F*>(ctx))(i);
  });
}

}  // namespace bayescond
