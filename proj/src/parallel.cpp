#include "simto/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace simto {

namespace {

int env_thread_cap() {
    const char* v = std::getenv("SIMTO_THREADS");
    if (!v) return 0;
    int n = std::atoi(v);
    return n > 0 ? n : 0;
}

std::atomic<ExecPolicy> g_policy{
#ifdef _OPENMP
    ExecPolicy::Parallel
#else
    ExecPolicy::Serial
#endif
};

struct OmpInit {
    OmpInit() {
#ifdef _OPENMP
        if (int cap = env_thread_cap(); cap > 0) omp_set_num_threads(cap);
#endif
    }
};
const OmpInit g_omp_init{};

}  // namespace

ExecPolicy default_policy() { return g_policy.load(std::memory_order_relaxed); }

void set_default_policy(ExecPolicy policy) { g_policy.store(policy, std::memory_order_relaxed); }

int thread_cap() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (int cap = env_thread_cap(); cap > 0 && cap < hw) return cap;
    return hw;
}

namespace detail {

void run_indexed_parallel(std::ptrdiff_t n, void (*thunk)(void*, std::ptrdiff_t), void* ctx) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) thunk(ctx, i);
#else
    for (std::ptrdiff_t i = 0; i < n; ++i) thunk(ctx, i);
#endif
}

}  // namespace detail

}  // namespace simto
