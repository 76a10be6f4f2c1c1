#ifndef CYLQG_PARALLEL_HPP
#define CYLQG_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace cylqg {

// Static block partition of [0,n) over nthreads workers. The partition
// depends only on (n, nthreads), never on timing, so runs with a fixed
// thread count are bitwise reproducible. Reductions should accumulate one
// partial per block and combine the partials in block order.
template <class F>
void parallel_for(std::size_t n, int nthreads, F&& body) {
  if (n == 0) return;
  int nt = std::max(1, nthreads);
  nt = static_cast<int>(std::min<std::size_t>(nt, n));
  if (nt == 1) {
    body(std::size_t{0}, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  const std::size_t chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    const std::size_t lo = chunk * static_cast<std::size_t>(t);
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi, t] { body(lo, hi, t); });
  }
  for (auto& th : pool) th.join();
}

inline int default_threads() {
  unsigned hc = std::thread::hardware_concurrency();
  if (hc == 0) hc = 1;
  return static_cast<int>(std::min(hc, 8u));
}

} // namespace cylqg

#endif
