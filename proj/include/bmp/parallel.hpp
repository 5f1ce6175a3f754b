#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace bmp {

/// Runs task(i) for i in [0, count) on `workers` threads with a static
/// contiguous partition. Tasks must write only to their own slot; callers
/// reduce afterwards in index order, so results do not depend on `workers`.
template <typename Task>
void for_each_index(std::size_t count, unsigned workers, Task&& task) {
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(workers, count);
  std::vector<std::exception_ptr> errors(chunks);
  std::vector<std::thread> threads;
  threads.reserve(chunks);
  for (std::size_t w = 0; w < chunks; ++w) {
    const std::size_t begin = count * w / chunks;
    const std::size_t end = count * (w + 1) / chunks;
    threads.emplace_back([&, w, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) task(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace bmp
