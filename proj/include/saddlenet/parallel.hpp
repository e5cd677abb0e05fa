#pragma once

// Replica fan-out. Every Monte Carlo replica is a pure function of its index
// (and the seed it maps to), so the OpenMP kernel and the serial reference
// produce identical outputs; tests assert this and bench/ times both.

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace saddlenet {

enum class Execution { serial, parallel };

template <class Result, class Fn>
std::vector<Result> serial_map(std::size_t n, Fn&& fn) {
  std::vector<Result> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
  return out;
}

template <class Result, class Fn>
std::vector<Result> parallel_map(std::size_t n, Fn&& fn) {
  std::vector<Result> out(n);
  std::exception_ptr failure;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(saddlenet_map_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

template <class Result, class Fn>
std::vector<Result> map_replicas(Execution exec, std::size_t n, Fn&& fn) {
  return exec == Execution::parallel ? parallel_map<Result>(n, fn)
                                     : serial_map<Result>(n, fn);
}

// Worker count for the parallel kernels; 0 leaves the OpenMP default.
inline void set_worker_count(int workers) {
#ifdef _OPENMP
  if (workers > 0) omp_set_num_threads(workers);
#else
  (void)workers;
#endif
}

}  // namespace saddlenet
