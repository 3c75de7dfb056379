#include "srlite/kernels.hpp"

#include <cmath>
#include <vector>

#include "srlite/parallel.hpp"

namespace srlite::kernels {
namespace {

// One output row of a (possibly transposed) matrix product. Inner loops are
// ordered so the streamed operand is read sequentially.
template <class S>
inline void matmul_row(const S* a, const S* b, S* crow, std::size_t i,
                       std::size_t m, std::size_t k, std::size_t n,
                       bool trans_a, bool trans_b, bool accumulate) {
  if (!accumulate) {
    for (std::size_t j = 0; j < n; ++j) crow[j] = S(0);
  }
  if (!trans_a && !trans_b) {
    const S* arow = a + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const S av = arow[kk];
      const S* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  } else if (!trans_a && trans_b) {
    const S* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const S* brow = b + j * k;
      S acc = S(0);
      for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      crow[j] += acc;
    }
  } else if (trans_a && !trans_b) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const S av = a[kk * m + i];
      const S* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      S acc = S(0);
      for (std::size_t kk = 0; kk < k; ++kk) acc += a[kk * m + i] * b[j * k + kk];
      crow[j] += acc;
    }
  }
}

template <class S>
inline void conv2d_row(const S* x, const S* w, S* y, std::size_t bi,
                       std::size_t yy, std::size_t H, std::size_t W,
                       std::size_t Cin, std::size_t Cout, std::size_t kh,
                       std::size_t kw, std::size_t pad, S* acc) {
  const std::size_t in_plane = H * W * Cin;
  for (std::size_t xx = 0; xx < W; ++xx) {
    for (std::size_t co = 0; co < Cout; ++co) acc[co] = S(0);
    for (std::size_t ky = 0; ky < kh; ++ky) {
      const long long iy = static_cast<long long>(yy + ky) - static_cast<long long>(pad);
      if (iy < 0 || iy >= static_cast<long long>(H)) continue;
      for (std::size_t kx = 0; kx < kw; ++kx) {
        const long long ix = static_cast<long long>(xx + kx) - static_cast<long long>(pad);
        if (ix < 0 || ix >= static_cast<long long>(W)) continue;
        const S* xin = x + bi * in_plane + (static_cast<std::size_t>(iy) * W +
                                            static_cast<std::size_t>(ix)) * Cin;
        const S* wk = w + (ky * kw + kx) * Cin * Cout;
        for (std::size_t ci = 0; ci < Cin; ++ci) {
          const S xv = xin[ci];
          const S* wrow = wk + ci * Cout;
          for (std::size_t co = 0; co < Cout; ++co) acc[co] += xv * wrow[co];
        }
      }
    }
    S* yout = y + (bi * H * W + yy * W + xx) * Cout;
    for (std::size_t co = 0; co < Cout; ++co) yout[co] = acc[co];
  }
}

template <class S>
inline void conv2d_grad_input_row(const S* dy, const S* w, S* dx, std::size_t bi,
                                  std::size_t yy, std::size_t H, std::size_t W,
                                  std::size_t Cin, std::size_t Cout,
                                  std::size_t kh, std::size_t kw, std::size_t pad,
                                  S* acc) {
  const std::size_t out_plane = H * W * Cout;
  for (std::size_t xx = 0; xx < W; ++xx) {
    for (std::size_t ci = 0; ci < Cin; ++ci) acc[ci] = S(0);
    for (std::size_t ky = 0; ky < kh; ++ky) {
      const long long oy = static_cast<long long>(yy) + static_cast<long long>(pad) -
                           static_cast<long long>(ky);
      if (oy < 0 || oy >= static_cast<long long>(H)) continue;
      for (std::size_t kx = 0; kx < kw; ++kx) {
        const long long ox = static_cast<long long>(xx) + static_cast<long long>(pad) -
                             static_cast<long long>(kx);
        if (ox < 0 || ox >= static_cast<long long>(W)) continue;
        const S* dyp = dy + bi * out_plane + (static_cast<std::size_t>(oy) * W +
                                              static_cast<std::size_t>(ox)) * Cout;
        const S* wk = w + (ky * kw + kx) * Cin * Cout;
        for (std::size_t ci = 0; ci < Cin; ++ci) {
          const S* wrow = wk + ci * Cout;
          S s = S(0);
          for (std::size_t co = 0; co < Cout; ++co) s += dyp[co] * wrow[co];
          acc[ci] += s;
        }
      }
    }
    S* dxp = dx + (bi * H * W + yy * W + xx) * Cin;
    for (std::size_t ci = 0; ci < Cin; ++ci) dxp[ci] += acc[ci];
  }
}

// One (ky,kx,ci) slice of the weight gradient: accumulates a Cout-vector
// over every batch element and output position.
template <class S>
inline void conv2d_grad_weight_slice(const S* x, const S* dy, S* dw,
                                     std::size_t slice, std::size_t B,
                                     std::size_t H, std::size_t W,
                                     std::size_t Cin, std::size_t Cout,
                                     std::size_t kw, std::size_t pad, S* acc) {
  const std::size_t ci = slice % Cin;
  const std::size_t kx = (slice / Cin) % kw;
  const std::size_t ky = slice / (Cin * kw);
  for (std::size_t co = 0; co < Cout; ++co) acc[co] = S(0);
  for (std::size_t bi = 0; bi < B; ++bi) {
    for (std::size_t yy = 0; yy < H; ++yy) {
      const long long iy = static_cast<long long>(yy + ky) - static_cast<long long>(pad);
      if (iy < 0 || iy >= static_cast<long long>(H)) continue;
      for (std::size_t xx = 0; xx < W; ++xx) {
        const long long ix = static_cast<long long>(xx + kx) - static_cast<long long>(pad);
        if (ix < 0 || ix >= static_cast<long long>(W)) continue;
        const S xv = x[(bi * H * W + static_cast<std::size_t>(iy) * W +
                        static_cast<std::size_t>(ix)) * Cin + ci];
        const S* dyp = dy + (bi * H * W + yy * W + xx) * Cout;
        for (std::size_t co = 0; co < Cout; ++co) acc[co] += xv * dyp[co];
      }
    }
  }
  S* dwp = dw + slice * Cout;
  for (std::size_t co = 0; co < Cout; ++co) dwp[co] += acc[co];
}

template <class S>
inline void softmax_row(const S* xr, S* yr, std::size_t cols) {
  S mx = xr[0];
  for (std::size_t j = 1; j < cols; ++j) mx = xr[j] > mx ? xr[j] : mx;
  S sum = S(0);
  for (std::size_t j = 0; j < cols; ++j) {
    yr[j] = std::exp(xr[j] - mx);
    sum += yr[j];
  }
  const S inv = S(1) / sum;
  for (std::size_t j = 0; j < cols; ++j) yr[j] *= inv;
}

}  // namespace

template <class S>
void matmul_serial(const S* a, const S* b, S* c, const std::size_t* a_off,
                   const std::size_t* b_off, std::size_t batch, std::size_t m,
                   std::size_t k, std::size_t n, bool trans_a, bool trans_b,
                   bool accumulate) {
  for (std::size_t r = 0; r < batch * m; ++r) {
    const std::size_t bi = r / m, i = r % m;
    matmul_row(a + a_off[bi], b + b_off[bi], c + bi * m * n + i * n, i, m, k, n,
               trans_a, trans_b, accumulate);
  }
}

template <class S>
void matmul(const S* a, const S* b, S* c, const std::size_t* a_off,
            const std::size_t* b_off, std::size_t batch, std::size_t m,
            std::size_t k, std::size_t n, bool trans_a, bool trans_b,
            bool accumulate) {
  parallel_for(
      batch * m,
      [&](std::size_t r) {
        const std::size_t bi = r / m, i = r % m;
        matmul_row(a + a_off[bi], b + b_off[bi], c + bi * m * n + i * n, i, m, k,
                   n, trans_a, trans_b, accumulate);
      },
      /*grain=*/(k * n >= 4096) ? std::size_t(4) : std::size_t(256));
}

template <class S>
void conv2d_serial(const S* x, const S* w, S* y, std::size_t B, std::size_t H,
                   std::size_t W, std::size_t Cin, std::size_t Cout,
                   std::size_t kh, std::size_t kw, std::size_t pad) {
  std::vector<S> acc(Cout);
  for (std::size_t r = 0; r < B * H; ++r) {
    conv2d_row(x, w, y, r / H, r % H, H, W, Cin, Cout, kh, kw, pad, acc.data());
  }
}

template <class S>
void conv2d(const S* x, const S* w, S* y, std::size_t B, std::size_t H,
            std::size_t W, std::size_t Cin, std::size_t Cout, std::size_t kh,
            std::size_t kw, std::size_t pad) {
  parallel_for(
      B * H,
      [&](std::size_t r) {
        // per-thread scratch; fully rewritten every row
        static thread_local std::vector<S> acc;
        acc.resize(Cout);
        conv2d_row(x, w, y, r / H, r % H, H, W, Cin, Cout, kh, kw, pad,
                   acc.data());
      },
      /*grain=*/2);
}

template <class S>
void conv2d_grad_input_serial(const S* dy, const S* w, S* dx, std::size_t B,
                              std::size_t H, std::size_t W, std::size_t Cin,
                              std::size_t Cout, std::size_t kh, std::size_t kw,
                              std::size_t pad) {
  std::vector<S> acc(Cin);
  for (std::size_t r = 0; r < B * H; ++r) {
    conv2d_grad_input_row(dy, w, dx, r / H, r % H, H, W, Cin, Cout, kh, kw, pad,
                          acc.data());
  }
}

template <class S>
void conv2d_grad_input(const S* dy, const S* w, S* dx, std::size_t B,
                       std::size_t H, std::size_t W, std::size_t Cin,
                       std::size_t Cout, std::size_t kh, std::size_t kw,
                       std::size_t pad) {
  parallel_for(
      B * H,
      [&](std::size_t r) {
        static thread_local std::vector<S> acc;
        acc.resize(Cin);
        conv2d_grad_input_row(dy, w, dx, r / H, r % H, H, W, Cin, Cout, kh, kw,
                              pad, acc.data());
      },
      /*grain=*/2);
}

template <class S>
void conv2d_grad_weight_serial(const S* x, const S* dy, S* dw, std::size_t B,
                               std::size_t H, std::size_t W, std::size_t Cin,
                               std::size_t Cout, std::size_t kh, std::size_t kw,
                               std::size_t pad) {
  std::vector<S> acc(Cout);
  for (std::size_t slice = 0; slice < kh * kw * Cin; ++slice) {
    conv2d_grad_weight_slice(x, dy, dw, slice, B, H, W, Cin, Cout, kw, pad,
                             acc.data());
  }
}

template <class S>
void conv2d_grad_weight(const S* x, const S* dy, S* dw, std::size_t B,
                        std::size_t H, std::size_t W, std::size_t Cin,
                        std::size_t Cout, std::size_t kh, std::size_t kw,
                        std::size_t pad) {
  parallel_for(
      kh * kw * Cin,
      [&](std::size_t slice) {
        static thread_local std::vector<S> acc;
        acc.resize(Cout);
        conv2d_grad_weight_slice(x, dy, dw, slice, B, H, W, Cin, Cout, kw, pad,
                                 acc.data());
      },
      /*grain=*/1);
}

template <class S>
void gather_serial(const S* src, const std::size_t* idx, S* dst, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = src[idx[i]];
}

template <class S>
void gather(const S* src, const std::size_t* idx, S* dst, std::size_t n) {
  parallel_for(n, [&](std::size_t i) { dst[i] = src[idx[i]]; }, 1u << 15);
}

template <class S>
void scatter_add(const S* src, const std::size_t* idx, S* dst, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[idx[i]] += src[i];
}

template <class S>
void softmax_rows_serial(const S* x, S* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) softmax_row(x + r * cols, y + r * cols, cols);
}

template <class S>
void softmax_rows(const S* x, S* y, std::size_t rows, std::size_t cols) {
  parallel_for(
      rows, [&](std::size_t r) { softmax_row(x + r * cols, y + r * cols, cols); },
      256);
}

#define SRLITE_INSTANTIATE_KERNELS(S)                                                \
  template void matmul_serial<S>(const S*, const S*, S*, const std::size_t*,         \
                                 const std::size_t*, std::size_t, std::size_t,       \
                                 std::size_t, std::size_t, bool, bool, bool);        \
  template void matmul<S>(const S*, const S*, S*, const std::size_t*,                \
                          const std::size_t*, std::size_t, std::size_t,              \
                          std::size_t, std::size_t, bool, bool, bool);               \
  template void conv2d_serial<S>(const S*, const S*, S*, std::size_t, std::size_t,   \
                                 std::size_t, std::size_t, std::size_t,              \
                                 std::size_t, std::size_t, std::size_t);             \
  template void conv2d<S>(const S*, const S*, S*, std::size_t, std::size_t,          \
                          std::size_t, std::size_t, std::size_t, std::size_t,        \
                          std::size_t, std::size_t);                                 \
  template void conv2d_grad_input_serial<S>(const S*, const S*, S*, std::size_t,     \
                                            std::size_t, std::size_t, std::size_t,   \
                                            std::size_t, std::size_t, std::size_t,   \
                                            std::size_t);                            \
  template void conv2d_grad_input<S>(const S*, const S*, S*, std::size_t,            \
                                     std::size_t, std::size_t, std::size_t,          \
                                     std::size_t, std::size_t, std::size_t,          \
                                     std::size_t);                                   \
  template void conv2d_grad_weight_serial<S>(const S*, const S*, S*, std::size_t,    \
                                             std::size_t, std::size_t, std::size_t,  \
                                             std::size_t, std::size_t, std::size_t,  \
                                             std::size_t);                           \
  template void conv2d_grad_weight<S>(const S*, const S*, S*, std::size_t,           \
                                      std::size_t, std::size_t, std::size_t,         \
                                      std::size_t, std::size_t, std::size_t,         \
                                      std::size_t);                                  \
  template void gather_serial<S>(const S*, const std::size_t*, S*, std::size_t);     \
  template void gather<S>(const S*, const std::size_t*, S*, std::size_t);            \
  template void scatter_add<S>(const S*, const std::size_t*, S*, std::size_t);       \
  template void softmax_rows_serial<S>(const S*, S*, std::size_t, std::size_t);      \
  template void softmax_rows<S>(const S*, S*, std::size_t, std::size_t);

SRLITE_INSTANTIATE_KERNELS(float)
SRLITE_INSTANTIATE_KERNELS(double)

#undef SRLITE_INSTANTIATE_KERNELS

}  // namespace srlite::kernels
