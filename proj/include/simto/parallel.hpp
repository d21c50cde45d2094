#pragma once

#include <cstddef>
#include <utility>

namespace simto {

// Execution policy for the hot kernels. Every kernel is written so that the
// parallel path performs bit-identical arithmetic to the serial one: loop
// bodies only write to disjoint output slots and reductions are done
// sequentially over precomputed partials. Serial therefore doubles as the
// reference implementation in tests and benchmarks.
enum class ExecPolicy { Serial, Parallel };

// Process-wide default, Parallel when built with OpenMP. SIMTO_THREADS caps
// the OpenMP thread count and the coarse-grained worker pools.
ExecPolicy default_policy();
void set_default_policy(ExecPolicy policy);

// Worker count for coarse-grained pools (sweep runs, evaluation grasps).
int thread_cap();

namespace detail {
void run_indexed_parallel(std::ptrdiff_t n, void (*thunk)(void*, std::ptrdiff_t), void* ctx);
}

template <class Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn, ExecPolicy policy = default_policy()) {
    if (policy == ExecPolicy::Serial) {
        for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
        return;
    }
    auto thunk = [](void* ctx, std::ptrdiff_t i) { (*static_cast<Fn*>(ctx))(i); };
    detail::run_indexed_parallel(n, thunk, &fn);
}

}  // namespace simto
