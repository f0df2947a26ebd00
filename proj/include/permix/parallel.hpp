#ifndef PERMIX_PARALLEL_HPP
#define PERMIX_PARALLEL_HPP

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace permix {

/// Worker count: PERMIX_THREADS if set and positive, otherwise 1.
/// Results of all parallel maps in this library are independent of it.
inline int worker_count() {
  if (const char* env = std::getenv("PERMIX_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

/// Chunked parallel loop over [0, count). fn(i) must be safe to run
/// concurrently for distinct i.
template <class F>
void parallel_for(long long count, F&& fn, int workers = worker_count()) {
  if (count <= 0) return;
  if (workers <= 1 || count == 1) {
    for (long long i = 0; i < count; ++i) fn(i);
    return;
  }
  const int w = static_cast<int>(std::min<long long>(workers, count));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(w));
  for (int t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      for (long long i = t; i < count; i += w) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace permix

#endif  // PERMIX_PARALLEL_HPP
