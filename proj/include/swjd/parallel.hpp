#ifndef SWJD_PARALLEL_HPP
#define SWJD_PARALLEL_HPP

// Scheduler-independent map-reduce over path indices. Paths are processed in
// fixed chunks; each chunk's partial accumulator is produced sequentially by
// whichever worker claims it, and partials are merged in chunk order. The
// reduction result is therefore bit-identical for any worker count.

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace swjd {

inline constexpr std::uint64_t kChunkSize = 4096;

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Acc: default-constructible, with merge(Acc&&) or merge(const Acc&).
// fn(path_index, acc) accumulates one path.
template <class Acc, class Fn>
Acc parallel_reduce_paths(std::uint64_t n_paths, int workers, Fn&& fn) {
  const std::uint64_t n_chunks = (n_paths + kChunkSize - 1) / kChunkSize;
  std::vector<Acc> partials(n_chunks);
  std::atomic<std::uint64_t> next{0};

  auto work = [&]() {
    while (true) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      Acc local;
      const std::uint64_t begin = c * kChunkSize;
      const std::uint64_t end = std::min(n_paths, begin + kChunkSize);
      for (std::uint64_t idx = begin; idx < end; ++idx) fn(idx, local);
      partials[c] = std::move(local);
    }
  };

  const int w = std::min<std::uint64_t>(resolve_workers(workers), std::max<std::uint64_t>(1, n_chunks));
  if (w <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(w));
    for (int k = 0; k < w; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  Acc total;
  for (auto& p : partials) total.merge(std::move(p));
  return total;
}

}  // namespace swjd

#endif  // SWJD_PARALLEL_HPP
