#pragma once

#include <cstddef>

namespace srlite {

// Number of threads the kernels may use. Resolution order: value set through
// set_thread_count, then the SRLITE_THREADS environment variable, then the
// hardware default. 0 means "auto".
int thread_count();
void set_thread_count(int n);

namespace detail {
void parallel_for_impl(std::size_t n, void (*body)(std::size_t, void*), void* ctx,
                       std::size_t grain);
}

// Runs body(i) for i in [0,n). Iterations must be independent; each output
// element is produced by exactly one iteration, so results are identical for
// any thread count.
template <class F>
void parallel_for(std::size_t n, F&& body, std::size_t grain = 2048) {
  auto thunk = [](std::size_t i, void* ctx) { (*static_cast<F*>(ctx))(i); };
  detail::parallel_for_impl(n, thunk, &body, grain);
}

}  // namespace srlite
