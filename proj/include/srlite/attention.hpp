#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "srlite/rng.hpp"
#include "srlite/tensor.hpp"

namespace srlite {

// Windowed multi-head self-attention in four flavors: plain or shifted
// windows, at the full or half window size.
struct MsaConfig {
  std::size_t channels = 0;
  std::size_t num_heads = 1;
  std::size_t window = 8;  // base window M
  bool shifted = false;
  bool half = false;

  std::size_t effective_window() const { return half ? window / 2 : window; }
  // Shift of the SW variants: half of this block's own (effective) window.
  std::size_t shift() const { return shifted ? effective_window() / 2 : 0; }
};

template <class S>
struct MsaParamsT {
  TensorT<S> wq, bq, wk, bk, wv, bv, wo, bo;
  TensorT<S> rel_bias;  // [(2m-1)^2, heads], one table per effective window

  static MsaParamsT create(const MsaConfig& cfg, Rng& rng);
  void register_params(ParamStore<S>& store, const std::string& prefix);
  std::size_t param_count() const;
};

using MsaParams = MsaParamsT<float>;

// Table row shared by every query/key pair at the same displacement:
// index (dy+m-1)*(2m-1)+(dx+m-1), flattened over [m^2, m^2] row-major.
std::vector<std::size_t> rel_bias_index(std::size_t m);

// 0 where both window positions come from the same pre-shift region of the
// 9-region boundary decomposition, -1e9 otherwise. Shape [ (H/m)*(W/m), m^2, m^2 ].
template <class S>
TensorT<S> build_shift_mask(std::size_t H, std::size_t W, std::size_t m,
                            std::size_t shift);

struct MsaOptions {
  // Copies the post-softmax attention tensor [num_windows, heads, m^2, m^2].
  std::vector<float>* attn_probs_f = nullptr;
  std::vector<double>* attn_probs_d = nullptr;
  bool disable_mask = false;  // for boundary-effect comparisons in tests
};

// softmax(QK^T/sqrt(C/heads) + rel_bias (+ mask)) V per window, heads
// concatenated and output-projected. Shape-preserving on (B,H,W,C).
template <class S>
TensorT<S> msa_forward(const TensorT<S>& x, const MsaConfig& cfg,
                       const MsaParamsT<S>& params,
                       const MsaOptions* opts = nullptr);

}  // namespace srlite
