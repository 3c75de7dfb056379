#pragma once

#include <cstddef>
#include <cstdint>

namespace srlite::kernels {

// Low-level dense kernels. Every kernel exists in two forms: a *_serial
// reference and an OpenMP-parallel version that splits work over output
// elements only, computing each element with the same inner arithmetic order
// as the serial form. The two are bit-identical for any thread count; the
// unsuffixed entry points dispatch on srlite::thread_count() and problem
// size. Layouts are row-major throughout; feature maps are (B,H,W,C).

// Batched matrix product: c[i] = op(a[i]) * op(b[i]) for i in [0,batch).
// a_off/b_off give the element offset of each batch slice (precomputed by the
// caller, which is where broadcasting is resolved); c is contiguous with
// m*n elements per slice. trans_a/trans_b transpose the per-slice operands.
// accumulate adds into c instead of overwriting.
template <class S>
void matmul_serial(const S* a, const S* b, S* c, const std::size_t* a_off,
                   const std::size_t* b_off, std::size_t batch, std::size_t m,
                   std::size_t k, std::size_t n, bool trans_a, bool trans_b,
                   bool accumulate);
template <class S>
void matmul(const S* a, const S* b, S* c, const std::size_t* a_off,
            const std::size_t* b_off, std::size_t batch, std::size_t m,
            std::size_t k, std::size_t n, bool trans_a, bool trans_b,
            bool accumulate);

// Cross-correlation (no kernel flip). x: (B,H,W,Cin), w: (kh,kw,Cin,Cout),
// y: (B,H,W,Cout). Zero padding `pad` on both spatial sides; kh==kw in
// {1,3} keeps H,W when pad == kh/2.
template <class S>
void conv2d_serial(const S* x, const S* w, S* y, std::size_t B, std::size_t H,
                   std::size_t W, std::size_t Cin, std::size_t Cout,
                   std::size_t kh, std::size_t kw, std::size_t pad);
template <class S>
void conv2d(const S* x, const S* w, S* y, std::size_t B, std::size_t H,
            std::size_t W, std::size_t Cin, std::size_t Cout, std::size_t kh,
            std::size_t kw, std::size_t pad);

// dx[b,y,x,ci] = sum over taps of dy * w. Accumulates into dx.
template <class S>
void conv2d_grad_input_serial(const S* dy, const S* w, S* dx, std::size_t B,
                              std::size_t H, std::size_t W, std::size_t Cin,
                              std::size_t Cout, std::size_t kh, std::size_t kw,
                              std::size_t pad);
template <class S>
void conv2d_grad_input(const S* dy, const S* w, S* dx, std::size_t B,
                       std::size_t H, std::size_t W, std::size_t Cin,
                       std::size_t Cout, std::size_t kh, std::size_t kw,
                       std::size_t pad);

// dw[ky,kx,ci,co] = sum over batch and space of x * dy. Accumulates into dw.
template <class S>
void conv2d_grad_weight_serial(const S* x, const S* dy, S* dw, std::size_t B,
                               std::size_t H, std::size_t W, std::size_t Cin,
                               std::size_t Cout, std::size_t kh, std::size_t kw,
                               std::size_t pad);
template <class S>
void conv2d_grad_weight(const S* x, const S* dy, S* dw, std::size_t B,
                        std::size_t H, std::size_t W, std::size_t Cin,
                        std::size_t Cout, std::size_t kh, std::size_t kw,
                        std::size_t pad);

// dst[i] = src[idx[i]].
template <class S>
void gather_serial(const S* src, const std::size_t* idx, S* dst, std::size_t n);
template <class S>
void gather(const S* src, const std::size_t* idx, S* dst, std::size_t n);

// dst[idx[i]] += src[i]. Indices may repeat, so this stays serial.
template <class S>
void scatter_add(const S* src, const std::size_t* idx, S* dst, std::size_t n);

// Row-wise softmax over the last axis with max subtraction.
template <class S>
void softmax_rows_serial(const S* x, S* y, std::size_t rows, std::size_t cols);
template <class S>
void softmax_rows(const S* x, S* y, std::size_t rows, std::size_t cols);

}  // namespace srlite::kernels
