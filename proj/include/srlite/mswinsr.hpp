#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srlite/attention.hpp"
#include "srlite/ops.hpp"
#include "srlite/rng.hpp"
#include "srlite/tensor.hpp"

namespace srlite {

// MSwinSR: stages of multi-size transformer blocks between a convolutional
// embedding and a sub-pixel reconstruction head.
struct MswinConfig {
  std::size_t channels = 60;            // embed width C
  std::vector<std::size_t> depth = {2, 2, 2};  // blocks per stage
  std::size_t window = 8;               // base window M; the half variants use M/2
  std::size_t scale = 4;                // upsampling factor
  std::size_t in_channels = 3;
  std::size_t num_heads = 6;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// One multi-size block: four parallel window attentions (plain, shifted,
// half-window plain, half-window shifted), each post-normalized and given a
// residual, concatenated to 4C, normalized, reduced 4C->2C->C by a GELU MLP,
// plus the block-input residual.
template <class S>
struct MstbT {
  std::array<MsaConfig, 4> branch_cfg{};
  std::array<MsaParamsT<S>, 4> branch{};
  std::array<TensorT<S>, 4> post_gamma{}, post_beta{};
  TensorT<S> cat_gamma, cat_beta;          // over 4C
  TensorT<S> mlp_w1, mlp_b1, mlp_w2, mlp_b2;  // 4C->2C, 2C->C

  static MstbT create(const MswinConfig& cfg, Rng& rng);
  void register_params(ParamStore<S>& store, const std::string& prefix);
  TensorT<S> forward(const TensorT<S>& x) const;
};

// blocks -> 3x3 conv (C->C) -> + stage input.
template <class S>
struct MswinStageT {
  std::vector<MstbT<S>> blocks;
  TensorT<S> conv_w, conv_b;

  static MswinStageT create(const MswinConfig& cfg, std::size_t num_blocks,
                            Rng& rng);
  void register_params(ParamStore<S>& store, const std::string& prefix);
  TensorT<S> forward(const TensorT<S>& x) const;
};

template <class S>
class MswinsrT {
 public:
  // Deterministic for a fixed (cfg, seed).
  static MswinsrT create(const MswinConfig& cfg, std::uint64_t seed);

  // (B,H,W,in_channels) -> (B,scale*H,scale*W,in_channels); H and W must be
  // multiples of the window.
  TensorT<S> forward(const TensorT<S>& lr) const;

  const MswinConfig& config() const { return cfg_; }
  ParamStore<S>& params() { return store_; }
  const ParamStore<S>& params() const { return store_; }
  // Number of attention blocks instantiated (4 per MSTB).
  std::size_t msa_count() const;

 private:
  MswinConfig cfg_;
  TensorT<S> embed_w_, embed_b_;  // 3x3, in_channels->C
  TensorT<S> head_w_, head_b_;    // 3x3, C->scale^2*in_channels
  std::vector<MswinStageT<S>> stages_;
  ParamStore<S> store_;
};

using Mswinsr = MswinsrT<float>;

}  // namespace srlite
