#include "hctn/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace hctn {

std::size_t max_threads() {
  static const std::size_t cached = [] {
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("HCTN_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v >= 1) n = std::min(n, static_cast<std::size_t>(v));
    }
    return n;
  }();
  return cached;
}

void parallel_for_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  const std::size_t workers = std::min(max_threads(), std::max<std::size_t>(n / 64, 1));
  if (workers <= 1 || n < 128) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& t : pool) t.join();
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  parallel_for_chunks(n, [&fn](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) fn(i);
  });
}

}  // namespace hctn
