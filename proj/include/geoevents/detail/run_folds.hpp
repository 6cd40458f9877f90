#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace geoevents {

template <class T, class Fn>
std::vector<T> run_folds(int n_folds, int threads, Fn fn) {
  std::vector<std::optional<T>> slots(static_cast<std::size_t>(n_folds));
  const int workers = std::clamp(threads, 1, std::max(n_folds, 1));
  if (workers == 1) {
    for (int f = 0; f < n_folds; ++f) slots[static_cast<std::size_t>(f)].emplace(fn(f));
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int f = next++; f < n_folds; f = next++) {
          try {
            slots[static_cast<std::size_t>(f)].emplace(fn(f));
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
  std::vector<T> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace geoevents
