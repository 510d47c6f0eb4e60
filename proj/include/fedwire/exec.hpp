#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace fedwire {

// Every kernel taking an Exec has a serial reference path and an OpenMP path.
// Both write per-index results into preallocated slots and reduce serially
// afterwards, so the two paths are bit-identical.
enum class Exec { serial, parallel };

// Exceptions cannot cross an OpenMP region boundary; the parallel path stores
// them per index and rethrows the lowest-index one, matching the serial path.
template <typename Fn>
void for_each_index(Exec exec, std::size_t n, Fn&& fn) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace fedwire
