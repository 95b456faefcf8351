#pragma once

#include <cstddef>
#include <exception>
#include <string_view>
#include <vector>

namespace gridsense {

/// Serial is the reference path; Parallel distributes independent Monte
/// Carlo units over OpenMP threads. Both write per-unit slots and reduce in
/// unit order, so they produce bitwise-identical results.
enum class ExecutionPolicy { Serial, Parallel };

std::string_view to_string(ExecutionPolicy policy);

/// Calls body(i) for i in [0, count). Exceptions are captured per unit and
/// the lowest-index one is rethrown after the loop.
template <typename Body>
void for_each_unit(std::size_t count, ExecutionPolicy policy, Body&& body) {
  std::vector<std::exception_ptr> errors(count);
  auto run = [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (policy == ExecutionPolicy::Parallel) {
    const auto n = static_cast<long long>(count);
#if defined(GRIDSENSE_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
    for (long long i = 0; i < n; ++i) run(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < count; ++i) run(i);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace gridsense
