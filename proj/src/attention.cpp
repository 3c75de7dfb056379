#include "srlite/attention.hpp"

#include <cmath>

#include "srlite/init.hpp"
#include "srlite/ops.hpp"

namespace srlite {

namespace {

void check_cfg(const MsaConfig& cfg) {
  if (cfg.channels == 0 || cfg.num_heads == 0 ||
      cfg.channels % cfg.num_heads != 0) {
    throw ConfigError("msa: channels " + std::to_string(cfg.channels) +
                      " must be a positive multiple of num_heads " +
                      std::to_string(cfg.num_heads));
  }
  if (cfg.effective_window() == 0) {
    throw ConfigError("msa: effective window must be at least 1");
  }
}

}  // namespace

template <class S>
MsaParamsT<S> MsaParamsT<S>::create(const MsaConfig& cfg, Rng& rng) {
  check_cfg(cfg);
  const std::size_t C = cfg.channels;
  const std::size_t m = cfg.effective_window();
  MsaParamsT<S> p;
  p.wq = trunc_normal_param<S>({C, C}, rng);
  p.bq = TensorT<S>::zeros({C}, true);
  p.wk = trunc_normal_param<S>({C, C}, rng);
  p.bk = TensorT<S>::zeros({C}, true);
  p.wv = trunc_normal_param<S>({C, C}, rng);
  p.bv = TensorT<S>::zeros({C}, true);
  p.wo = trunc_normal_param<S>({C, C}, rng);
  p.bo = TensorT<S>::zeros({C}, true);
  p.rel_bias = trunc_normal_param<S>({(2 * m - 1) * (2 * m - 1), cfg.num_heads}, rng);
  return p;
}

template <class S>
void MsaParamsT<S>::register_params(ParamStore<S>& store,
                                    const std::string& prefix) {
  store.add(prefix + ".wq", wq);
  store.add(prefix + ".bq", bq);
  store.add(prefix + ".wk", wk);
  store.add(prefix + ".bk", bk);
  store.add(prefix + ".wv", wv);
  store.add(prefix + ".bv", bv);
  store.add(prefix + ".wo", wo);
  store.add(prefix + ".bo", bo);
  store.add(prefix + ".rel_bias", rel_bias);
}

template <class S>
std::size_t MsaParamsT<S>::param_count() const {
  return wq.size() + bq.size() + wk.size() + bk.size() + wv.size() + bv.size() +
         wo.size() + bo.size() + rel_bias.size();
}

std::vector<std::size_t> rel_bias_index(std::size_t m) {
  const std::size_t mm = m * m;
  std::vector<std::size_t> idx(mm * mm);
  for (std::size_t i = 0; i < mm; ++i) {
    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(i / m);
    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(i % m);
    for (std::size_t j = 0; j < mm; ++j) {
      const std::ptrdiff_t jy = static_cast<std::ptrdiff_t>(j / m);
      const std::ptrdiff_t jx = static_cast<std::ptrdiff_t>(j % m);
      const std::size_t dy = static_cast<std::size_t>(iy - jy + static_cast<std::ptrdiff_t>(m) - 1);
      const std::size_t dx = static_cast<std::size_t>(ix - jx + static_cast<std::ptrdiff_t>(m) - 1);
      idx[i * mm + j] = dy * (2 * m - 1) + dx;
    }
  }
  return idx;
}

template <class S>
TensorT<S> build_shift_mask(std::size_t H, std::size_t W, std::size_t m,
                            std::size_t shift) {
  if (m == 0 || H % m != 0 || W % m != 0) {
    throw ShapeError("build_shift_mask: window must divide the map");
  }
  if (shift >= m) {
    throw ShapeError("build_shift_mask: shift must be smaller than the window");
  }
  const std::size_t nh = H / m, nw = W / m, mm = m * m;
  // 9-region decomposition: axis region is 0 before the last window,
  // 1 in its unwrapped part, 2 in the wrapped tail.
  const auto region = [&](std::size_t v, std::size_t n) -> std::size_t {
    if (v < n - m) return 0;
    if (v < n - shift) return 1;
    return 2;
  };
  std::vector<S> mask(nh * nw * mm * mm, S(0));
  for (std::size_t ty = 0; ty < nh; ++ty)
    for (std::size_t tx = 0; tx < nw; ++tx) {
      std::vector<std::size_t> ids(mm);
      for (std::size_t iy = 0; iy < m; ++iy)
        for (std::size_t ix = 0; ix < m; ++ix)
          ids[iy * m + ix] =
              region(ty * m + iy, H) * 3 + region(tx * m + ix, W);
      S* w = mask.data() + (ty * nw + tx) * mm * mm;
      for (std::size_t i = 0; i < mm; ++i)
        for (std::size_t j = 0; j < mm; ++j)
          if (ids[i] != ids[j]) w[i * mm + j] = S(-1e9);
    }
  return TensorT<S>::from_vector({nh * nw, mm, mm}, std::move(mask));
}

template <class S>
TensorT<S> msa_forward(const TensorT<S>& x, const MsaConfig& cfg,
                       const MsaParamsT<S>& params, const MsaOptions* opts) {
  check_cfg(cfg);
  if (x.ndim() != 4) {
    throw ShapeError("msa_forward: expected (B,H,W,C), got " + shape_str(x.shape()));
  }
  const std::size_t B = x.extent(0), H = x.extent(1), W = x.extent(2),
                    C = x.extent(3);
  if (C != cfg.channels) {
    throw ShapeError("msa_forward: map has " + std::to_string(C) +
                     " channels, config says " + std::to_string(cfg.channels));
  }
  const std::size_t m = cfg.effective_window();
  if (H % m != 0 || W % m != 0) {
    throw ShapeError("msa_forward: window " + std::to_string(m) +
                     " does not divide " + shape_str(x.shape()));
  }
  const std::size_t heads = cfg.num_heads;
  const std::size_t d = C / heads;
  const std::size_t mm = m * m;
  const std::size_t shift = cfg.shift();

  TensorT<S> shifted = shift > 0 ? roll2d(x, -static_cast<std::ptrdiff_t>(shift),
                                          -static_cast<std::ptrdiff_t>(shift))
                                 : x;
  auto wins = window_partition(shifted, m);  // [NW, mm, C]
  const std::size_t NW = wins.extent(0);

  const auto split_heads = [&](const TensorT<S>& t) {
    return permute(reshape(t, {NW, mm, heads, d}), {0, 2, 1, 3});
  };
  auto q = split_heads(linear(wins, params.wq, params.bq));
  auto k = split_heads(linear(wins, params.wk, params.bk));
  auto v = split_heads(linear(wins, params.wv, params.bv));

  auto logits = scale(matmul(q, permute(k, {0, 1, 3, 2})),
                      static_cast<S>(1.0 / std::sqrt(static_cast<double>(d))));

  // relative position bias, shared across windows: [heads, mm, mm]
  const auto rel_idx = rel_bias_index(m);
  std::vector<std::size_t> bias_idx(heads * mm * mm);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t ij = 0; ij < mm * mm; ++ij)
      bias_idx[h * mm * mm + ij] = rel_idx[ij] * heads + h;
  auto bias = gather(params.rel_bias, {heads, mm, mm}, std::move(bias_idx));
  logits = add_broadcast(logits, bias);

  if (shift > 0 && !(opts && opts->disable_mask)) {
    auto mask = build_shift_mask<S>(H, W, m, shift);  // [nwpi, mm, mm]
    const std::size_t nwpi = mask.extent(0);
    // broadcast over batch and heads: expose the per-image window axis last
    auto l5 = permute(reshape(logits, {B, nwpi, heads, mm, mm}), {0, 2, 1, 3, 4});
    l5 = add_broadcast(l5, mask);
    logits = reshape(permute(l5, {0, 2, 1, 3, 4}), {NW, heads, mm, mm});
  }

  auto probs = softmax(logits, 3);
  if (opts) {
    if (opts->attn_probs_f) {
      opts->attn_probs_f->assign(probs.data().begin(), probs.data().end());
    }
    if (opts->attn_probs_d) {
      opts->attn_probs_d->assign(probs.data().begin(), probs.data().end());
    }
  }

  auto ctx = matmul(probs, v);  // [NW, heads, mm, d]
  auto merged = reshape(permute(ctx, {0, 2, 1, 3}), {NW, mm, C});
  auto proj = linear(merged, params.wo, params.bo);
  auto map = window_reverse(proj, m, B, H, W);
  if (shift > 0) {
    map = roll2d(map, static_cast<std::ptrdiff_t>(shift),
                 static_cast<std::ptrdiff_t>(shift));
  }
  return map;
}

template struct MsaParamsT<float>;
template struct MsaParamsT<double>;
template TensorT<float> build_shift_mask<float>(std::size_t, std::size_t,
                                                std::size_t, std::size_t);
template TensorT<double> build_shift_mask<double>(std::size_t, std::size_t,
                                                  std::size_t, std::size_t);
template TensorT<float> msa_forward<float>(const TensorT<float>&,
                                           const MsaConfig&,
                                           const MsaParamsT<float>&,
                                           const MsaOptions*);
template TensorT<double> msa_forward<double>(const TensorT<double>&,
                                             const MsaConfig&,
                                             const MsaParamsT<double>&,
                                             const MsaOptions*);

}  // namespace srlite
