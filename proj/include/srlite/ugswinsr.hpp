#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srlite/attention.hpp"
#include "srlite/ops.hpp"
#include "srlite/rng.hpp"
#include "srlite/tensor.hpp"

namespace srlite {

// UGSwinSR: a U-shaped Swin generator that predicts a residual on top of a
// bicubic upsample, and a window-attention discriminator for adversarial
// training. Channel width doubles at every downsampling level (C * 2^k).
struct UgswinConfig {
  std::size_t channels = 60;        // embed width C at the top level
  std::size_t depth = 4;            // number of downsamplings in the generator
  std::size_t window = 8;           // base window M, clamped to the map extent per level
  std::size_t scale = 4;
  std::size_t in_channels = 3;
  std::size_t num_heads = 6;        // shared by every level
  std::size_t blocks_per_level = 2; // attention blocks per level, alternating plain/shifted
  std::size_t lr_size = 64;         // spatial extent the networks are sized for

  // Throws ConfigError naming the offending field.
  void validate() const;

  std::size_t hr_size() const { return lr_size * scale; }
  std::size_t level_channels(std::size_t k) const { return channels << k; }
};

// Window size actually used on a map of the given extent.
inline std::size_t clamp_window(std::size_t window, std::size_t extent) {
  return window < extent ? window : extent;
}

// Pre-norm transformer block: x + MSA(LN(x)), then x + MLP(LN(x)) with a
// 4x-wide GELU MLP.
template <class S>
struct SwinBlockT {
  MsaConfig cfg;
  MsaParamsT<S> msa;
  TensorT<S> ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
  TensorT<S> mlp_w1, mlp_b1, mlp_w2, mlp_b2;  // C->4C, 4C->C

  static SwinBlockT create(std::size_t channels, std::size_t num_heads,
                           std::size_t window, bool shifted, Rng& rng);
  void register_params(ParamStore<S>& store, const std::string& prefix);
  TensorT<S> forward(const TensorT<S>& x) const;
};

// A run of blocks at one resolution. Shifted blocks degrade to plain ones
// when the window covers the whole map (a cyclic shift of a single window
// only scrambles it).
template <class S>
struct SwinLevelT {
  std::vector<SwinBlockT<S>> blocks;

  static SwinLevelT create(std::size_t channels, std::size_t num_heads,
                           std::size_t window, std::size_t extent,
                           std::size_t num_blocks, Rng& rng);
  void register_params(ParamStore<S>& store, const std::string& prefix);
  TensorT<S> forward(const TensorT<S>& x) const;
};

// Optional inspection of intermediate generator shapes.
struct GenTrace {
  Shape bottleneck;
  std::vector<Shape> skips;
};

template <class S>
class UgswinGeneratorT {
 public:
  static UgswinGeneratorT create(const UgswinConfig& cfg, std::uint64_t seed);

  // (B,H,W,in_channels) -> (B,scale*H,scale*W,in_channels). Output is
  // bicubic_resize(lr) plus the network residual, so a zero-initialized head
  // reproduces the bicubic upsample exactly. lr must be an untracked value.
  TensorT<S> forward(const TensorT<S>& lr, GenTrace* trace = nullptr) const;

  const UgswinConfig& config() const { return cfg_; }
  ParamStore<S>& params() { return store_; }
  const ParamStore<S>& params() const { return store_; }

 private:
  struct Down {
    SwinLevelT<S> level;
    TensorT<S> merge_gamma, merge_beta, merge_w;  // 4C -> 2C, bias-free
  };
  struct Up {
    TensorT<S> expand_w;          // C_{k+1} -> 2*C_{k+1}, then shuffle to C_k
    TensorT<S> fuse_w, fuse_b;    // 2*C_k -> C_k after the skip concat
    SwinLevelT<S> level;
  };

  UgswinConfig cfg_;
  TensorT<S> embed_w_, embed_b_;
  std::vector<Down> down_;
  SwinLevelT<S> bottleneck_;
  std::vector<Up> up_;            // stored deepest-first
  TensorT<S> head_w_, head_b_;    // zero-initialized
  ParamStore<S> store_;
};

template <class S>
class UgswinDiscriminatorT {
 public:
  static UgswinDiscriminatorT create(const UgswinConfig& cfg,
                                     std::uint64_t seed);

  // (B,H,W,in_channels) HR-sized images -> one logit per batch item, [B].
  TensorT<S> forward(const TensorT<S>& img) const;

  const UgswinConfig& config() const { return cfg_; }
  ParamStore<S>& params() { return store_; }
  const ParamStore<S>& params() const { return store_; }
  std::size_t num_levels() const { return levels_.size(); }
  std::size_t final_channels() const;

 private:
  struct Down {
    SwinLevelT<S> level;
    TensorT<S> merge_gamma, merge_beta, merge_w;
  };

  UgswinConfig cfg_;
  TensorT<S> embed_w_, embed_b_;
  std::vector<Down> levels_;      // applied until the map is one window
  TensorT<S> final_gamma_, final_beta_;
  TensorT<S> fc_w_, fc_b_;        // final_channels -> 1
  ParamStore<S> store_;
};

struct GanLossConfig {
  double lambda_pixel = 1.0;
  double lambda_adv = 1e-3;

  // Both weights must be non-negative and at least one positive.
  void validate() const;
};

template <class S>
struct GanLossesT {
  TensorT<S> loss_d;  // BCE(d_real -> 1) + BCE(d_fake -> 0)
  TensorT<S> loss_g;  // lambda_pixel * L1 + lambda_adv * BCE(d_fake -> 1)
};

// Pure loss algebra; no detaching happens here. The two losses share
// d_fake's graph, so callers running alternating updates must evaluate the
// discriminator separately for each side (see GanTrainer). Zero-weighted
// terms are skipped, so lambda_adv = 0 yields exactly the scaled L1.
template <class S>
GanLossesT<S> gan_losses(const TensorT<S>& d_real, const TensorT<S>& d_fake,
                         const TensorT<S>& pred, const TensorT<S>& target,
                         const GanLossConfig& cfg);

using UgswinGenerator = UgswinGeneratorT<float>;
using UgswinDiscriminator = UgswinDiscriminatorT<float>;

}  // namespace srlite
