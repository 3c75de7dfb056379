#pragma once

#include <cstddef>

#include "srlite/tensor.hpp"

namespace srlite {

// Neural building blocks on (B,H,W,C) feature maps and flat activations.
// Everything here is differentiable except bicubic_resize, which is a fixed
// resampler and refuses tracked inputs.

// Same-size cross-correlation with zero padding; weights are (kh,kw,Cin,Cout)
// and kh == kw == 2*pad+1 so H and W are preserved.
template <class S>
TensorT<S> conv2d(const TensorT<S>& x, const TensorT<S>& w, std::size_t pad);
template <class S>
TensorT<S> conv2d(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b,
                  std::size_t pad);

// x[..., Din] * w[Din, Dout] (+ b[Dout]) applied position-wise.
template <class S>
TensorT<S> linear(const TensorT<S>& x, const TensorT<S>& w);
template <class S>
TensorT<S> linear(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b);

// (B,H,W,s^2*C) -> (B,sH,sW,C); channel c*s^2 + dy*s + dx lands at spatial
// offset (dy,dx) inside the upscaled cell.
template <class S>
TensorT<S> pixel_shuffle(const TensorT<S>& x, std::size_t s);

// (B,H,W,C) -> (B*(H/m)*(W/m), m*m, C), tiles in row-major order and
// row-major within each tile. window_reverse is the exact inverse.
template <class S>
TensorT<S> window_partition(const TensorT<S>& x, std::size_t m);
template <class S>
TensorT<S> window_reverse(const TensorT<S>& windows, std::size_t m, std::size_t B,
                          std::size_t H, std::size_t W);

// Cyclic shift along H and W; positive shifts move content down/right.
template <class S>
TensorT<S> roll2d(const TensorT<S>& x, std::ptrdiff_t shift_y,
                  std::ptrdiff_t shift_x);

// Normalizes the last axis to zero mean / unit variance, then applies the
// per-channel affine. Fused backward.
template <class S>
TensorT<S> layer_norm(const TensorT<S>& x, const TensorT<S>& gamma,
                      const TensorT<S>& beta, double eps = 1e-5);

// tanh-approximation GELU.
template <class S>
TensorT<S> gelu(const TensorT<S>& x);

// (B,H,W,C) -> (B,H/2,W/2,2C): gathers each 2x2 cell into 4C channels in the
// order top-left, bottom-left, top-right, bottom-right, layer-norms the 4C
// vector, then applies a bias-free 4C->2C linear map.
template <class S>
TensorT<S> patch_merge(const TensorT<S>& x, const TensorT<S>& gamma,
                       const TensorT<S>& beta, const TensorT<S>& w);

// (B,H,W,C) -> (B,2H,2W,C/2): bias-free linear C->2C then pixel_shuffle(2).
template <class S>
TensorT<S> patch_expand(const TensorT<S>& x, const TensorT<S>& w);

// Separable Catmull-Rom resampling (Keys a=-0.5), half-pixel centers,
// clamped edges. Internal arithmetic in double; width pass then height pass.
// Accepts a (B,H,W,C) map or a single (H,W,C) image (rank preserved).
// Value-only: throws if x requires grad.
template <class S>
TensorT<S> bicubic_resize(const TensorT<S>& x, std::size_t out_h,
                          std::size_t out_w);

// Mean absolute difference. Subgradient at zero difference is 0.
template <class S>
TensorT<S> l1_loss(const TensorT<S>& pred, const TensorT<S>& target);

// Mean of max(z,0) - z*t + log(1+exp(-|z|)): numerically stable binary cross
// entropy on raw logits.
template <class S>
TensorT<S> bce_with_logits_mean(const TensorT<S>& logits,
                                const TensorT<S>& targets);

}  // namespace srlite
