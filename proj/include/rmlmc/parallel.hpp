#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace rmlmc {

// Runs fn(shard) for every shard index, spreading shards over `workers`
// threads. Shards are independent; callers that need determinism keep
// per-shard outputs and merge them in index order afterwards.
inline void run_sharded(std::size_t n_shards, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n_shards <= 1) {
    for (std::size_t s = 0; s < n_shards; ++s) fn(s);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (;;) {
      const std::size_t s = next.fetch_add(1);
      if (s >= n_shards || failed.load()) return;
      try {
        fn(s);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), n_shards);
  threads.reserve(count);
  for (std::size_t i = 0; i < count; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failed.load()) std::rethrow_exception(failure);
}

} // namespace rmlmc
