#pragma once

#include <cstddef>
#include <exception>
#include <string_view>

#include <omp.h>

namespace dvae {

/// Selects between the serial reference loop and the OpenMP loop. Both run
/// the same per-item body; callers keep results per item and reduce them in
/// index order, so the two paths produce bit-identical output.
enum class Execution { serial, parallel };

constexpr std::string_view to_string(Execution e) {
  return e == Execution::serial ? "serial" : "parallel";
}

template <class Body>
void for_each_index(std::size_t n, Execution exec, Body&& body) {
  if (exec == Execution::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(dvae_for_each_index_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

inline int worker_count() { return omp_get_max_threads(); }

}  // namespace dvae
