#include "srlite/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>

namespace srlite {
namespace {

std::atomic<int> g_threads{-1};  // -1 = unresolved

int resolve_from_env() {
  const char* env = std::getenv("SRLITE_THREADS");
  if (env != nullptr) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return omp_get_max_threads();
}

}  // namespace

int thread_count() {
  int t = g_threads.load(std::memory_order_relaxed);
  if (t == -1) {
    t = resolve_from_env();
    g_threads.store(t, std::memory_order_relaxed);
  }
  return t;
}

void set_thread_count(int n) {
  g_threads.store(n > 0 ? n : resolve_from_env(), std::memory_order_relaxed);
}

namespace detail {

void parallel_for_impl(std::size_t n, void (*body)(std::size_t, void*), void* ctx,
                       std::size_t grain) {
  const int threads = thread_count();
  if (threads <= 1 || n < grain) {
    for (std::size_t i = 0; i < n; ++i) body(i, ctx);
    return;
  }
#pragma omp parallel for num_threads(threads) schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    body(static_cast<std::size_t>(i), ctx);
  }
}

}  // namespace detail
}  // namespace srlite
