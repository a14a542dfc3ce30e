#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace twinsipm::detail {

// Runs fn(lo, hi) over contiguous chunks of [0, n). The split only decides
// which thread touches which range; all per-item state is derived from the
// item index, so results do not depend on `threads`.
template <typename Fn>
void parallel_chunks(std::uint64_t n, unsigned threads, Fn fn) {
  if (threads <= 1 || n < 2) {
    fn(std::uint64_t{0}, n);
    return;
  }
  if (threads > n) threads = static_cast<unsigned>(n);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::uint64_t chunk = n / threads;
  const std::uint64_t rem = n % threads;
  std::uint64_t lo = 0;
  for (unsigned t = 0; t < threads; ++t) {
    const std::uint64_t hi = lo + chunk + (t < rem ? 1 : 0);
    pool.emplace_back(fn, lo, hi);
    lo = hi;
  }
  for (auto& th : pool) th.join();
}

}  // namespace twinsipm::detail
