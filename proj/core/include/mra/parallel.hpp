#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mra {

// Worker count used by the library. Defaults to the hardware concurrency and
// can be lowered (e.g. to 1) for debugging; results never depend on it.
std::size_t worker_count();
void set_worker_count(std::size_t workers);

namespace detail {
// Set on pool threads so nested for_each_chunk calls run inline.
inline thread_local bool inside_pool = false;
}  // namespace detail

// Calls fn(chunk, begin, end) for fixed-size chunks of [0, n). Chunk boundaries
// depend only on n and chunk_size, so callers that store one partial result per
// chunk and merge them in chunk order are deterministic.
template <class Fn>
void for_each_chunk(std::size_t n, std::size_t chunk_size, Fn&& fn) {
  if (n == 0) return;
  chunk_size = std::max<std::size_t>(chunk_size, 1);
  const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
  const std::size_t workers = detail::inside_pool ? 1 : std::min(worker_count(), chunks);
  auto run = [&](std::size_t c) {
    const std::size_t begin = c * chunk_size;
    fn(c, begin, std::min(n, begin + chunk_size));
  };
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      detail::inside_pool = true;
      for (std::size_t c = next++; c < chunks; c = next++) {
        try {
          run(c);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
  return n == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
}

}  // namespace mra
