#include "lattice_echo/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lattice_echo {

namespace {

std::atomic<int> g_workers{0};  // 0 = use hardware concurrency
thread_local bool t_in_parallel = false;

int hardware_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace

int worker_count() {
  int n = g_workers.load(std::memory_order_relaxed);
  return n > 0 ? n : hardware_workers();
}

void set_worker_count(int n) { g_workers.store(n, std::memory_order_relaxed); }

void parallel_chunks(std::int64_t n_chunks,
                     const std::function<void(std::int64_t)>& fn) {
  if (n_chunks <= 0) return;
  int workers = worker_count();
  if (t_in_parallel || workers <= 1 || n_chunks == 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) fn(c);
    return;
  }
  if (workers > n_chunks) workers = static_cast<int>(n_chunks);

  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    t_in_parallel = true;
    for (;;) {
      std::int64_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= n_chunks) break;
      try {
        fn(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        break;
      }
    }
    t_in_parallel = false;
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int i = 1; i < workers; ++i) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace lattice_echo
