#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace iva {

inline int default_thread_count() {
  if (const char* env = std::getenv("IVAUCTIONS_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs body(chunk_index, begin, end) over [0, total) split into contiguous
/// chunks, one chunk per worker slot. Results must be combined by the caller
/// in chunk order so the outcome is independent of scheduling.
inline void parallel_chunks(uint64_t total, int threads,
                            const std::function<void(int, uint64_t, uint64_t)>& body) {
  if (threads <= 0) threads = default_thread_count();
  int chunks = static_cast<int>(std::min<uint64_t>(static_cast<uint64_t>(threads), total));
  if (chunks <= 1) {
    if (total > 0) body(0, 0, total);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(chunks));
  uint64_t per = total / static_cast<uint64_t>(chunks);
  uint64_t rem = total % static_cast<uint64_t>(chunks);
  uint64_t begin = 0;
  for (int c = 0; c < chunks; ++c) {
    uint64_t len = per + (static_cast<uint64_t>(c) < rem ? 1 : 0);
    uint64_t end = begin + len;
    pool.emplace_back([c, begin, end, &body] { body(c, begin, end); });
    begin = end;
  }
  for (auto& t : pool) t.join();
}

}  // namespace iva
