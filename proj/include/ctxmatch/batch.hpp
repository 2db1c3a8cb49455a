#pragma once

#include <cstdint>
#include <exception>
#include <span>
#include <vector>

namespace ctxmatch {

/// out[i] = fn(items[i]), items spread over OpenMP threads. The first
/// exception thrown by any item is rethrown after the loop.
template <class T, class Fn>
std::vector<double> parallel_map(std::span<const T> items, Fn&& fn) {
  std::vector<double> out(items.size());
  const auto n = static_cast<std::int64_t>(items.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic) if (n > 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(items[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(ctxmatch_parallel_map)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace ctxmatch
