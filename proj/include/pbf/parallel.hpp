#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace pbf {

// Process-wide cap on worker threads (CLI --threads). 0 = hardware count.
void set_thread_count(int n);
int thread_count();

// Runs fn(block_index, begin, end) over [0, n) split into blocks of
// block_size. Blocks are claimed dynamically but each block index is fixed,
// so per-block outputs reduced in index order give results independent of
// the thread count.
void parallel_for_blocks(std::size_t n, std::size_t block_size,
                         const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t block_count(std::size_t n, std::size_t block_size) {
  return (n + block_size - 1) / block_size;
}

}  // namespace pbf
