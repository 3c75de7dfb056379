#include "srlite/ugswinsr.hpp"

#include "srlite/init.hpp"

namespace srlite {

void UgswinConfig::validate() const {
  if (channels == 0) throw ConfigError("channels must be positive");
  if (num_heads == 0 || channels % num_heads != 0) {
    throw ConfigError("channels " + std::to_string(channels) +
                      " must be a positive multiple of num_heads " +
                      std::to_string(num_heads));
  }
  if (depth == 0) throw ConfigError("depth must be at least 1");
  if (blocks_per_level == 0) {
    throw ConfigError("blocks_per_level must be at least 1");
  }
  if (window < 2) throw ConfigError("window must be at least 2");
  if (scale < 2 || scale > 4) {
    throw ConfigError("scale must be 2, 3, or 4, got " + std::to_string(scale));
  }
  if (in_channels == 0) throw ConfigError("in_channels must be positive");
  if (lr_size == 0 || lr_size % (std::size_t{1} << depth) != 0) {
    throw ConfigError("lr_size " + std::to_string(lr_size) +
                      " must be a positive multiple of 2^depth = " +
                      std::to_string(std::size_t{1} << depth));
  }
  for (std::size_t k = 0; k <= depth; ++k) {
    const std::size_t extent = lr_size >> k;
    const std::size_t m = clamp_window(window, extent);
    if (extent % m != 0) {
      throw ConfigError("window " + std::to_string(window) +
                        " does not tile the level-" + std::to_string(k) +
                        " map of extent " + std::to_string(extent));
    }
  }
  // Discriminator pyramid: halve the high-resolution map until one window
  // covers it.
  for (std::size_t size = hr_size(); size > window; size /= 2) {
    if (size % 2 != 0 || size % window != 0) {
      throw ConfigError("discriminator map extent " + std::to_string(size) +
                        " (from lr_size*scale) is not divisible by the "
                        "window " +
                        std::to_string(window));
    }
  }
}

void GanLossConfig::validate() const {
  if (lambda_pixel < 0 || lambda_adv < 0) {
    throw ConfigError("lambda_pixel and lambda_adv must be non-negative");
  }
  if (lambda_pixel == 0 && lambda_adv == 0) {
    throw ConfigError("lambda_pixel and lambda_adv cannot both be zero");
  }
}

template <class S>
SwinBlockT<S> SwinBlockT<S>::create(std::size_t channels, std::size_t num_heads,
                                    std::size_t window, bool shifted,
                                    Rng& rng) {
  SwinBlockT<S> b;
  b.cfg = MsaConfig{channels, num_heads, window, shifted, /*half=*/false};
  b.msa = MsaParamsT<S>::create(b.cfg, rng);
  b.ln1_gamma = const_param<S>({channels}, S(1));
  b.ln1_beta = const_param<S>({channels}, S(0));
  b.ln2_gamma = const_param<S>({channels}, S(1));
  b.ln2_beta = const_param<S>({channels}, S(0));
  b.mlp_w1 = trunc_normal_param<S>({channels, 4 * channels}, rng);
  b.mlp_b1 = const_param<S>({4 * channels}, S(0));
  b.mlp_w2 = trunc_normal_param<S>({4 * channels, channels}, rng);
  b.mlp_b2 = const_param<S>({channels}, S(0));
  return b;
}

template <class S>
void SwinBlockT<S>::register_params(ParamStore<S>& store,
                                    const std::string& prefix) {
  msa.register_params(store, prefix + ".msa");
  store.add(prefix + ".ln1_gamma", ln1_gamma);
  store.add(prefix + ".ln1_beta", ln1_beta);
  store.add(prefix + ".ln2_gamma", ln2_gamma);
  store.add(prefix + ".ln2_beta", ln2_beta);
  store.add(prefix + ".mlp_w1", mlp_w1);
  store.add(prefix + ".mlp_b1", mlp_b1);
  store.add(prefix + ".mlp_w2", mlp_w2);
  store.add(prefix + ".mlp_b2", mlp_b2);
}

template <class S>
TensorT<S> SwinBlockT<S>::forward(const TensorT<S>& x) const {
  TensorT<S> h = layer_norm(x, ln1_gamma, ln1_beta);
  h = add(msa_forward(h, cfg, msa), x);
  TensorT<S> m = layer_norm(h, ln2_gamma, ln2_beta);
  m = linear(m, mlp_w1, mlp_b1);
  m = gelu(m);
  m = linear(m, mlp_w2, mlp_b2);
  return add(m, h);
}

template <class S>
SwinLevelT<S> SwinLevelT<S>::create(std::size_t channels, std::size_t num_heads,
                                    std::size_t window, std::size_t extent,
                                    std::size_t num_blocks, Rng& rng) {
  SwinLevelT<S> lvl;
  const std::size_t m = clamp_window(window, extent);
  lvl.blocks.reserve(num_blocks);
  for (std::size_t i = 0; i < num_blocks; ++i) {
    const bool shifted = i % 2 == 1 && m < extent;
    lvl.blocks.push_back(SwinBlockT<S>::create(channels, num_heads, m, shifted, rng));
  }
  return lvl;
}

template <class S>
void SwinLevelT<S>::register_params(ParamStore<S>& store,
                                    const std::string& prefix) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].register_params(store, prefix + ".block" + std::to_string(i));
  }
}

template <class S>
TensorT<S> SwinLevelT<S>::forward(const TensorT<S>& x) const {
  TensorT<S> h = x;
  for (const auto& b : blocks) h = b.forward(h);
  return h;
}

template <class S>
UgswinGeneratorT<S> UgswinGeneratorT<S>::create(const UgswinConfig& cfg,
                                                std::uint64_t seed) {
  cfg.validate();
  UgswinGeneratorT<S> g;
  g.cfg_ = cfg;
  Rng rng = Rng::stream(seed, "gen.init");
  const std::size_t C = cfg.channels;
  g.embed_w_ = trunc_normal_param<S>({3, 3, cfg.in_channels, C}, rng);
  g.embed_b_ = const_param<S>({C}, S(0));

  g.down_.reserve(cfg.depth);
  for (std::size_t k = 0; k < cfg.depth; ++k) {
    const std::size_t ck = cfg.level_channels(k);
    Down d;
    d.level = SwinLevelT<S>::create(ck, cfg.num_heads, cfg.window,
                                    cfg.lr_size >> k, cfg.blocks_per_level, rng);
    d.merge_gamma = const_param<S>({4 * ck}, S(1));
    d.merge_beta = const_param<S>({4 * ck}, S(0));
    d.merge_w = trunc_normal_param<S>({4 * ck, 2 * ck}, rng);
    g.down_.push_back(std::move(d));
  }
  g.bottleneck_ = SwinLevelT<S>::create(cfg.level_channels(cfg.depth),
                                        cfg.num_heads, cfg.window,
                                        cfg.lr_size >> cfg.depth,
                                        cfg.blocks_per_level, rng);
  g.up_.reserve(cfg.depth);
  for (std::size_t k = cfg.depth; k-- > 0;) {
    const std::size_t ck = cfg.level_channels(k);
    const std::size_t ck1 = cfg.level_channels(k + 1);
    Up u;
    u.expand_w = trunc_normal_param<S>({ck1, 2 * ck1}, rng);
    u.fuse_w = trunc_normal_param<S>({2 * ck, ck}, rng);
    u.fuse_b = const_param<S>({ck}, S(0));
    u.level = SwinLevelT<S>::create(ck, cfg.num_heads, cfg.window,
                                    cfg.lr_size >> k, cfg.blocks_per_level, rng);
    g.up_.push_back(std::move(u));
  }
  const std::size_t out_c = cfg.scale * cfg.scale * cfg.in_channels;
  // Zero head: training starts from the plain bicubic upsample.
  g.head_w_ = const_param<S>({3, 3, C, out_c}, S(0));
  g.head_b_ = const_param<S>({out_c}, S(0));

  g.store_.add("embed.conv_w", g.embed_w_);
  g.store_.add("embed.conv_b", g.embed_b_);
  for (std::size_t k = 0; k < g.down_.size(); ++k) {
    const std::string p = "down" + std::to_string(k);
    g.down_[k].level.register_params(g.store_, p);
    g.store_.add(p + ".merge_gamma", g.down_[k].merge_gamma);
    g.store_.add(p + ".merge_beta", g.down_[k].merge_beta);
    g.store_.add(p + ".merge_w", g.down_[k].merge_w);
  }
  g.bottleneck_.register_params(g.store_, "bottleneck");
  for (std::size_t i = 0; i < g.up_.size(); ++i) {
    const std::string p = "up" + std::to_string(i);
    g.store_.add(p + ".expand_w", g.up_[i].expand_w);
    g.store_.add(p + ".fuse_w", g.up_[i].fuse_w);
    g.store_.add(p + ".fuse_b", g.up_[i].fuse_b);
    g.up_[i].level.register_params(g.store_, p);
  }
  g.store_.add("head.conv_w", g.head_w_);
  g.store_.add("head.conv_b", g.head_b_);
  return g;
}

template <class S>
TensorT<S> UgswinGeneratorT<S>::forward(const TensorT<S>& lr,
                                        GenTrace* trace) const {
  if (lr.ndim() != 4 || lr.extent(3) != cfg_.in_channels) {
    throw ShapeError("generator expects (B,H,W," +
                     std::to_string(cfg_.in_channels) + "), got " +
                     shape_str(lr.shape()));
  }
  const std::size_t H = lr.extent(1), W = lr.extent(2);
  for (std::size_t k = 0; k <= cfg_.depth; ++k) {
    const std::size_t m = clamp_window(cfg_.window, cfg_.lr_size >> k);
    const std::size_t div = m << k;
    if (H % div != 0 || W % div != 0) {
      throw ShapeError("input extents " + shape_str(lr.shape()) +
                       " do not tile level " + std::to_string(k) +
                       " (window " + std::to_string(m) + ")");
    }
  }

  TensorT<S> base =
      bicubic_resize(lr, cfg_.scale * H, cfg_.scale * W);
  TensorT<S> h = conv2d(lr, embed_w_, embed_b_, 1);
  std::vector<TensorT<S>> skips;
  skips.reserve(down_.size());
  for (const auto& d : down_) {
    h = d.level.forward(h);
    skips.push_back(h);
    h = patch_merge(h, d.merge_gamma, d.merge_beta, d.merge_w);
  }
  h = bottleneck_.forward(h);
  if (trace) {
    trace->bottleneck = h.shape();
    trace->skips.clear();
    for (const auto& s : skips) trace->skips.push_back(s.shape());
  }
  for (std::size_t i = 0; i < up_.size(); ++i) {
    const std::size_t k = cfg_.depth - 1 - i;
    h = patch_expand(h, up_[i].expand_w);
    h = concat(std::vector<TensorT<S>>{skips[k], h}, 3);
    h = linear(h, up_[i].fuse_w, up_[i].fuse_b);
    h = up_[i].level.forward(h);
  }
  TensorT<S> res = pixel_shuffle(conv2d(h, head_w_, head_b_, 1), cfg_.scale);
  return add(res, base);
}

template <class S>
UgswinDiscriminatorT<S> UgswinDiscriminatorT<S>::create(const UgswinConfig& cfg,
                                                        std::uint64_t seed) {
  cfg.validate();
  UgswinDiscriminatorT<S> d;
  d.cfg_ = cfg;
  Rng rng = Rng::stream(seed, "disc.init");
  d.embed_w_ = trunc_normal_param<S>({3, 3, cfg.in_channels, cfg.channels}, rng);
  d.embed_b_ = const_param<S>({cfg.channels}, S(0));
  std::size_t ch = cfg.channels;
  for (std::size_t size = cfg.hr_size(); size > cfg.window; size /= 2) {
    Down lvl;
    lvl.level = SwinLevelT<S>::create(ch, cfg.num_heads, cfg.window, size,
                                      cfg.blocks_per_level, rng);
    lvl.merge_gamma = const_param<S>({4 * ch}, S(1));
    lvl.merge_beta = const_param<S>({4 * ch}, S(0));
    lvl.merge_w = trunc_normal_param<S>({4 * ch, 2 * ch}, rng);
    d.levels_.push_back(std::move(lvl));
    ch *= 2;
  }
  d.final_gamma_ = const_param<S>({ch}, S(1));
  d.final_beta_ = const_param<S>({ch}, S(0));
  d.fc_w_ = trunc_normal_param<S>({ch, 1}, rng);
  d.fc_b_ = const_param<S>({1}, S(0));

  d.store_.add("embed.conv_w", d.embed_w_);
  d.store_.add("embed.conv_b", d.embed_b_);
  for (std::size_t k = 0; k < d.levels_.size(); ++k) {
    const std::string p = "level" + std::to_string(k);
    d.levels_[k].level.register_params(d.store_, p);
    d.store_.add(p + ".merge_gamma", d.levels_[k].merge_gamma);
    d.store_.add(p + ".merge_beta", d.levels_[k].merge_beta);
    d.store_.add(p + ".merge_w", d.levels_[k].merge_w);
  }
  d.store_.add("final.ln_gamma", d.final_gamma_);
  d.store_.add("final.ln_beta", d.final_beta_);
  d.store_.add("final.fc_w", d.fc_w_);
  d.store_.add("final.fc_b", d.fc_b_);
  return d;
}

template <class S>
std::size_t UgswinDiscriminatorT<S>::final_channels() const {
  return cfg_.channels << levels_.size();
}

template <class S>
TensorT<S> UgswinDiscriminatorT<S>::forward(const TensorT<S>& img) const {
  if (img.ndim() != 4 || img.extent(3) != cfg_.in_channels) {
    throw ShapeError("discriminator expects (B,H,W," +
                     std::to_string(cfg_.in_channels) + "), got " +
                     shape_str(img.shape()));
  }
  TensorT<S> h = conv2d(img, embed_w_, embed_b_, 1);
  for (const auto& lvl : levels_) {
    const std::size_t m = lvl.level.blocks.front().cfg.window;
    if (h.extent(1) % m != 0 || h.extent(2) % m != 0 ||
        h.extent(1) % 2 != 0 || h.extent(2) % 2 != 0) {
      throw ShapeError("discriminator input " + shape_str(img.shape()) +
                       " does not tile the downsampling pyramid");
    }
    h = lvl.level.forward(h);
    h = patch_merge(h, lvl.merge_gamma, lvl.merge_beta, lvl.merge_w);
  }
  h = layer_norm(h, final_gamma_, final_beta_);
  const std::size_t B = h.extent(0);
  const std::size_t hw = h.extent(1) * h.extent(2);
  const std::size_t cf = h.extent(3);
  h = reshape(h, {B, hw, cf});
  h = mean_axis(h, 1);
  h = linear(h, fc_w_, fc_b_);
  return reshape(h, {B});
}

template <class S>
GanLossesT<S> gan_losses(const TensorT<S>& d_real, const TensorT<S>& d_fake,
                         const TensorT<S>& pred, const TensorT<S>& target,
                         const GanLossConfig& cfg) {
  cfg.validate();
  GanLossesT<S> out;
  TensorT<S> ones_real = TensorT<S>::full(
      Shape(d_real.shape().begin(), d_real.shape().end()), S(1));
  TensorT<S> zeros_fake = TensorT<S>::zeros(
      Shape(d_fake.shape().begin(), d_fake.shape().end()));
  out.loss_d = add(bce_with_logits_mean(d_real, ones_real),
                   bce_with_logits_mean(d_fake, zeros_fake));

  TensorT<S> pixel, adv;
  if (cfg.lambda_pixel > 0) {
    pixel = scale(l1_loss(pred, target), static_cast<S>(cfg.lambda_pixel));
  }
  if (cfg.lambda_adv > 0) {
    TensorT<S> ones_fake = TensorT<S>::full(
        Shape(d_fake.shape().begin(), d_fake.shape().end()), S(1));
    adv = scale(bce_with_logits_mean(d_fake, ones_fake),
                static_cast<S>(cfg.lambda_adv));
  }
  if (pixel.defined() && adv.defined()) {
    out.loss_g = add(pixel, adv);
  } else {
    out.loss_g = pixel.defined() ? pixel : adv;
  }
  return out;
}

template struct SwinBlockT<float>;
template struct SwinBlockT<double>;
template struct SwinLevelT<float>;
template struct SwinLevelT<double>;
template class UgswinGeneratorT<float>;
template class UgswinGeneratorT<double>;
template class UgswinDiscriminatorT<float>;
template class UgswinDiscriminatorT<double>;
template GanLossesT<float> gan_losses(const TensorT<float>&, const TensorT<float>&,
                                      const TensorT<float>&, const TensorT<float>&,
                                      const GanLossConfig&);
template GanLossesT<double> gan_losses(const TensorT<double>&, const TensorT<double>&,
                                       const TensorT<double>&, const TensorT<double>&,
                                       const GanLossConfig&);

}  // namespace srlite
