#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace spdelab {

// Replica loops are embarrassingly parallel: every iteration owns its state and
// writes to its own output slot, so OpenMP and serial execution produce
// bit-identical results. The serial path is kept as the reference
// implementation for tests and for the benchmark comparison.
enum class ExecMode { Serial, OpenMP };

// Thread budget: min(omp_get_max_threads(), SPDELAB_THREADS if set).
// SPDELAB_THREADS caps parallelism without affecting results.
int thread_budget();

ExecMode default_exec_mode();

// Runs fn(i) for i in [0, n). Iterations must not share mutable state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  ExecMode mode = default_exec_mode());

} // namespace spdelab
