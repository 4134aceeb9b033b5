#include "spdelab/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spdelab {

int thread_budget() {
    int n = 1;
#ifdef _OPENMP
    n = omp_get_max_threads();
#endif
    if (const char* env = std::getenv("SPDELAB_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1) n = std::min(n, cap);
        } catch (...) {
            // unparsable cap is ignored
        }
    }
    return std::max(1, n);
}

ExecMode default_exec_mode() {
#ifdef _OPENMP
    return thread_budget() > 1 ? ExecMode::OpenMP : ExecMode::Serial;
#else
    return ExecMode::Serial;
#endif
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, ExecMode mode) {
#ifdef _OPENMP
    if (mode == ExecMode::OpenMP) {
        const int threads = thread_budget();
        // exceptions cannot unwind out of the parallel region: capture the
        // first one and rethrow after the join
        std::exception_ptr first_error;
        std::mutex error_mutex;
        #pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
            try {
                fn(static_cast<std::size_t>(i));
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
        if (first_error) std::rethrow_exception(first_error);
        return;
    }
#else
    (void)mode;
#endif
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

} // namespace spdelab
