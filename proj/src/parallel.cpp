#include "pbf/parallel.hpp"

#include <algorithm>
#include <exception>
#include <mutex>

namespace pbf {

namespace {
std::atomic<int> g_thread_cap{0};
}

void set_thread_count(int n) { g_thread_cap.store(n < 0 ? 0 : n); }

int thread_count() {
  int cap = g_thread_cap.load();
  if (cap > 0) return cap;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for_blocks(std::size_t n, std::size_t block_size,
                         const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t nblocks = block_count(n, block_size);
  const int workers = std::min<std::size_t>(thread_count(), nblocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b)
      fn(b, b * block_size, std::min(n, (b + 1) * block_size));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    try {
      for (;;) {
        std::size_t b = next.fetch_add(1);
        if (b >= nblocks) return;
        fn(b, b * block_size, std::min(n, (b + 1) * block_size));
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace pbf
