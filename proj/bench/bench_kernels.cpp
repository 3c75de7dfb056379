// Times the serial reference kernels against their OpenMP counterparts and
// confirms the two produce bit-identical output.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "srlite/kernels.hpp"
#include "srlite/parallel.hpp"
#include "srlite/rng.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

std::vector<float> rand_vec(std::size_t n, srlite::Rng& rng) {
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.normal());
  return v;
}

double best_ms(const std::function<void()>& fn, int reps = 5) {
  fn();  // warm up
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = clock_type::now();
    fn();
    const double ms =
        std::chrono::duration<double, std::milli>(clock_type::now() - t0)
            .count();
    if (ms < best) best = ms;
  }
  return best;
}

void report(const char* kernel, const std::string& size, double serial_ms,
            double parallel_ms, bool identical) {
  std::printf("%-14s %-20s %10.2f %10.2f %9.2fx %10s\n", kernel, size.c_str(),
              serial_ms, parallel_ms, serial_ms / parallel_ms,
              identical ? "yes" : "NO");
}

void bench_matmul(std::size_t m, std::size_t k, std::size_t n) {
  srlite::Rng rng(1);
  const auto a = rand_vec(m * k, rng);
  const auto b = rand_vec(k * n, rng);
  std::vector<float> ys(m * n), yp(m * n);
  const std::size_t off = 0;
  const double ts = best_ms([&] {
    srlite::kernels::matmul_serial(a.data(), b.data(), ys.data(), &off, &off,
                                   1, m, k, n, false, false, false);
  });
  const double tp = best_ms([&] {
    srlite::kernels::matmul(a.data(), b.data(), yp.data(), &off, &off, 1, m,
                            k, n, false, false, false);
  });
  report("matmul",
         std::to_string(m) + "x" + std::to_string(k) + "x" + std::to_string(n),
         ts, tp, std::memcmp(ys.data(), yp.data(), ys.size() * 4) == 0);
}

void bench_conv(std::size_t hw, std::size_t c) {
  srlite::Rng rng(2);
  const auto x = rand_vec(hw * hw * c, rng);
  const auto w = rand_vec(3 * 3 * c * c, rng);
  std::vector<float> ys(hw * hw * c), yp(hw * hw * c);
  const double ts = best_ms([&] {
    srlite::kernels::conv2d_serial(x.data(), w.data(), ys.data(), 1, hw, hw, c,
                                   c, 3, 3, 1);
  });
  const double tp = best_ms([&] {
    srlite::kernels::conv2d(x.data(), w.data(), yp.data(), 1, hw, hw, c, c, 3,
                            3, 1);
  });
  report("conv2d 3x3",
         std::to_string(hw) + "x" + std::to_string(hw) + "x" +
             std::to_string(c),
         ts, tp, std::memcmp(ys.data(), yp.data(), ys.size() * 4) == 0);
}

void bench_softmax(std::size_t rows, std::size_t cols) {
  srlite::Rng rng(3);
  const auto x = rand_vec(rows * cols, rng);
  std::vector<float> ys(rows * cols), yp(rows * cols);
  const double ts = best_ms([&] {
    srlite::kernels::softmax_rows_serial(x.data(), ys.data(), rows, cols);
  });
  const double tp = best_ms(
      [&] { srlite::kernels::softmax_rows(x.data(), yp.data(), rows, cols); });
  report("softmax rows", std::to_string(rows) + "x" + std::to_string(cols), ts,
         tp, std::memcmp(ys.data(), yp.data(), ys.size() * 4) == 0);
}

}  // namespace

int main() {
  std::printf("threads: %d\n\n", srlite::thread_count());
  std::printf("%-14s %-20s %10s %10s %9s %10s\n", "kernel", "size",
              "serial ms", "openmp ms", "speedup", "identical");
  bench_matmul(128, 128, 128);
  bench_matmul(256, 256, 256);
  bench_matmul(512, 512, 512);
  bench_conv(64, 32);
  bench_conv(128, 32);
  bench_softmax(8192, 256);
  bench_softmax(1024, 4096);
  return 0;
}
