#include "srlite/mswinsr.hpp"

#include "srlite/init.hpp"

namespace srlite {

void MswinConfig::validate() const {
  if (channels == 0) throw ConfigError("channels must be positive");
  if (num_heads == 0 || channels % num_heads != 0) {
    throw ConfigError("channels " + std::to_string(channels) +
                      " must be a positive multiple of num_heads " +
                      std::to_string(num_heads));
  }
  if (depth.empty()) throw ConfigError("depth must list at least one stage");
  for (std::size_t d : depth) {
    if (d == 0) throw ConfigError("depth entries must be at least 1");
  }
  if (window < 2 || window % 2 != 0) {
    throw ConfigError("window must be even and at least 2 (half-window "
                      "branches use window/2), got " +
                      std::to_string(window));
  }
  if (scale < 2 || scale > 4) {
    throw ConfigError("scale must be 2, 3, or 4, got " + std::to_string(scale));
  }
  if (in_channels == 0) throw ConfigError("in_channels must be positive");
}

template <class S>
MstbT<S> MstbT<S>::create(const MswinConfig& cfg, Rng& rng) {
  MstbT<S> b;
  const std::size_t C = cfg.channels;
  for (std::size_t j = 0; j < 4; ++j) {
    b.branch_cfg[j] = MsaConfig{C, cfg.num_heads, cfg.window,
                                /*shifted=*/j % 2 == 1, /*half=*/j >= 2};
    b.branch[j] = MsaParamsT<S>::create(b.branch_cfg[j], rng);
    b.post_gamma[j] = const_param<S>({C}, S(1));
    b.post_beta[j] = const_param<S>({C}, S(0));
  }
  b.cat_gamma = const_param<S>({4 * C}, S(1));
  b.cat_beta = const_param<S>({4 * C}, S(0));
  b.mlp_w1 = trunc_normal_param<S>({4 * C, 2 * C}, rng);
  b.mlp_b1 = const_param<S>({2 * C}, S(0));
  b.mlp_w2 = trunc_normal_param<S>({2 * C, C}, rng);
  b.mlp_b2 = const_param<S>({C}, S(0));
  return b;
}

template <class S>
void MstbT<S>::register_params(ParamStore<S>& store, const std::string& prefix) {
  for (std::size_t j = 0; j < 4; ++j) {
    const std::string mp = prefix + ".msa" + std::to_string(j);
    branch[j].register_params(store, mp);
    store.add(mp + ".post_gamma", post_gamma[j]);
    store.add(mp + ".post_beta", post_beta[j]);
  }
  store.add(prefix + ".cat_gamma", cat_gamma);
  store.add(prefix + ".cat_beta", cat_beta);
  store.add(prefix + ".mlp_w1", mlp_w1);
  store.add(prefix + ".mlp_b1", mlp_b1);
  store.add(prefix + ".mlp_w2", mlp_w2);
  store.add(prefix + ".mlp_b2", mlp_b2);
}

template <class S>
TensorT<S> MstbT<S>::forward(const TensorT<S>& x) const {
  std::vector<TensorT<S>> branches;
  branches.reserve(4);
  for (std::size_t j = 0; j < 4; ++j) {
    TensorT<S> f = msa_forward(x, branch_cfg[j], branch[j]);
    f = layer_norm(f, post_gamma[j], post_beta[j]);
    branches.push_back(add(f, x));
  }
  TensorT<S> h = concat(branches, 3);
  h = layer_norm(h, cat_gamma, cat_beta);
  h = linear(h, mlp_w1, mlp_b1);
  h = gelu(h);
  h = linear(h, mlp_w2, mlp_b2);
  return add(h, x);
}

template <class S>
MswinStageT<S> MswinStageT<S>::create(const MswinConfig& cfg,
                                      std::size_t num_blocks, Rng& rng) {
  MswinStageT<S> st;
  st.blocks.reserve(num_blocks);
  for (std::size_t i = 0; i < num_blocks; ++i) {
    st.blocks.push_back(MstbT<S>::create(cfg, rng));
  }
  const std::size_t C = cfg.channels;
  st.conv_w = trunc_normal_param<S>({3, 3, C, C}, rng);
  st.conv_b = const_param<S>({C}, S(0));
  return st;
}

template <class S>
void MswinStageT<S>::register_params(ParamStore<S>& store,
                                     const std::string& prefix) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].register_params(store, prefix + ".mstb" + std::to_string(i));
  }
  store.add(prefix + ".conv_w", conv_w);
  store.add(prefix + ".conv_b", conv_b);
}

template <class S>
TensorT<S> MswinStageT<S>::forward(const TensorT<S>& x) const {
  TensorT<S> h = x;
  for (const auto& b : blocks) h = b.forward(h);
  h = conv2d(h, conv_w, conv_b, 1);
  return add(h, x);
}

template <class S>
MswinsrT<S> MswinsrT<S>::create(const MswinConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  MswinsrT<S> model;
  model.cfg_ = cfg;
  Rng rng = Rng::stream(seed, "init");
  const std::size_t C = cfg.channels;
  model.embed_w_ = trunc_normal_param<S>({3, 3, cfg.in_channels, C}, rng);
  model.embed_b_ = const_param<S>({C}, S(0));
  model.stages_.reserve(cfg.depth.size());
  for (std::size_t L : cfg.depth) {
    model.stages_.push_back(MswinStageT<S>::create(cfg, L, rng));
  }
  const std::size_t out_c = cfg.scale * cfg.scale * cfg.in_channels;
  model.head_w_ = trunc_normal_param<S>({3, 3, C, out_c}, rng);
  model.head_b_ = const_param<S>({out_c}, S(0));

  model.store_.add("embed.conv_w", model.embed_w_);
  model.store_.add("embed.conv_b", model.embed_b_);
  for (std::size_t i = 0; i < model.stages_.size(); ++i) {
    model.stages_[i].register_params(model.store_,
                                     "stage" + std::to_string(i));
  }
  model.store_.add("head.conv_w", model.head_w_);
  model.store_.add("head.conv_b", model.head_b_);
  return model;
}

template <class S>
TensorT<S> MswinsrT<S>::forward(const TensorT<S>& lr) const {
  if (lr.ndim() != 4 || lr.extent(3) != cfg_.in_channels) {
    throw ShapeError("forward expects (B,H,W," +
                     std::to_string(cfg_.in_channels) + "), got " +
                     shape_str(lr.shape()));
  }
  if (lr.extent(1) % cfg_.window != 0 || lr.extent(2) % cfg_.window != 0) {
    throw ShapeError("input extents " + shape_str(lr.shape()) +
                     " must be multiples of the window " +
                     std::to_string(cfg_.window));
  }
  TensorT<S> h = conv2d(lr, embed_w_, embed_b_, 1);
  for (const auto& st : stages_) h = st.forward(h);
  h = conv2d(h, head_w_, head_b_, 1);
  return pixel_shuffle(h, cfg_.scale);
}

template <class S>
std::size_t MswinsrT<S>::msa_count() const {
  std::size_t n = 0;
  for (const auto& st : stages_) n += st.blocks.size() * 4;
  return n;
}

template struct MstbT<float>;
template struct MstbT<double>;
template struct MswinStageT<float>;
template struct MswinStageT<double>;
template class MswinsrT<float>;
template class MswinsrT<double>;

}  // namespace srlite
