#pragma once

#include <cstdint>
#include <functional>

namespace lattice_echo {

// Number of worker threads used by grid scans, candidate verification and
// the Monte Carlo suites. Results are bit-identical for any worker count:
// work is split into fixed chunks and every chunk's output depends only on
// the input, never on the schedule.
int worker_count();
void set_worker_count(int n);

// Runs fn(chunk_index) for chunk_index in [0, n_chunks), distributing
// chunks over the worker pool. Chunks must write to disjoint state.
// Nested calls run serially on the caller's thread.
void parallel_chunks(std::int64_t n_chunks,
                     const std::function<void(std::int64_t)>& fn);

}  // namespace lattice_echo
