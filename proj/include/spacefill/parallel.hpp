#ifndef SPACEFILL_PARALLEL_HPP
#define SPACEFILL_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace spacefill {

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over contiguous chunks covering [0, n), one per worker.
/// Small ranges run inline on the calling thread.
template <class Body>
void parallel_chunks(std::ptrdiff_t n, unsigned threads, Body&& body) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n < 2048) {
    body(std::ptrdiff_t{0}, n);
    return;
  }
  const auto workers = static_cast<std::ptrdiff_t>(std::min<std::ptrdiff_t>(threads, n));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::ptrdiff_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        body(n * w / workers, n * (w + 1) / workers);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Runs body(i) for i in [0, n). Each index is visited exactly once, so writes to
/// slot i are deterministic for any thread count.
template <class Body>
void parallel_for(std::ptrdiff_t n, unsigned threads, Body&& body) {
  parallel_chunks(n, threads, [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
    for (std::ptrdiff_t i = begin; i < end; ++i) body(i);
  });
}

}  // namespace spacefill

#endif  // SPACEFILL_PARALLEL_HPP
