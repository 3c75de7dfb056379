#include "srlite/ops.hpp"

#include <algorithm>
#include <cmath>

#include "srlite/kernels.hpp"
#include "srlite/parallel.hpp"
#include "srlite/profile.hpp"

namespace srlite {

using detail::make_op;
using detail::NodeT;

namespace {

template <class S>
void require_rank4(const TensorT<S>& x, const char* op) {
  if (x.ndim() != 4) {
    throw ShapeError(std::string(op) + ": expected a (B,H,W,C) map, got " +
                     shape_str(x.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> conv2d(const TensorT<S>& x, const TensorT<S>& w, std::size_t pad) {
  require_rank4(x, "conv2d");
  if (w.ndim() != 4) {
    throw ShapeError("conv2d: weights must be (kh,kw,Cin,Cout), got " +
                     shape_str(w.shape()));
  }
  const std::size_t B = x.extent(0), H = x.extent(1), W = x.extent(2),
                    Cin = x.extent(3);
  const std::size_t kh = w.extent(0), kw = w.extent(1), wci = w.extent(2),
                    Cout = w.extent(3);
  if (wci != Cin) {
    throw ShapeError("conv2d: input has " + std::to_string(Cin) +
                     " channels but weights expect " + std::to_string(wci));
  }
  if (kh != 2 * pad + 1 || kw != 2 * pad + 1) {
    throw ShapeError("conv2d: kernel " + std::to_string(kh) + "x" +
                     std::to_string(kw) + " with pad " + std::to_string(pad) +
                     " does not preserve the spatial extents");
  }
  std::vector<S> out(B * H * W * Cout);
  kernels::conv2d(x.data().data(), w.data().data(), out.data(), B, H, W, Cin,
                  Cout, kh, kw, pad);
  profile::count_multiadds(static_cast<std::uint64_t>(B) * H * W * Cin * Cout *
                           kh * kw);
  return make_op<S>({B, H, W, Cout}, std::move(out), {x, w},
                    [xn = x.node(), wn = w.node(), B, H, W, Cin, Cout, kh, kw,
                     pad](NodeT<S>& o) {
                      if (xn->requires_grad) {
                        xn->ensure_grad();
                        kernels::conv2d_grad_input(o.grad.data(), wn->value.data(),
                                                   xn->grad.data(), B, H, W, Cin,
                                                   Cout, kh, kw, pad);
                      }
                      if (wn->requires_grad) {
                        wn->ensure_grad();
                        kernels::conv2d_grad_weight(xn->value.data(), o.grad.data(),
                                                    wn->grad.data(), B, H, W, Cin,
                                                    Cout, kh, kw, pad);
                      }
                    });
}

template <class S>
TensorT<S> conv2d(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b,
                  std::size_t pad) {
  auto y = conv2d(x, w, pad);
  if (b.ndim() != 1 || b.extent(0) != w.extent(3)) {
    throw ShapeError("conv2d: bias must be (Cout), got " + shape_str(b.shape()));
  }
  return add_broadcast(y, b);
}

// ---------------------------------------------------------------------------
// linear
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> linear(const TensorT<S>& x, const TensorT<S>& w) {
  if (w.ndim() != 2) {
    throw ShapeError("linear: weights must be (Din,Dout), got " +
                     shape_str(w.shape()));
  }
  const std::size_t din = w.extent(0);
  if (x.ndim() < 1 || x.shape().back() != din) {
    throw ShapeError("linear: input " + shape_str(x.shape()) +
                     " does not end in " + std::to_string(din));
  }
  const std::size_t rows = x.size() / din;
  auto flat = reshape(x, {rows, din});
  auto y = matmul(flat, w);
  Shape out_shape = x.shape();
  out_shape.back() = w.extent(1);
  return reshape(y, std::move(out_shape));
}

template <class S>
TensorT<S> linear(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b) {
  auto y = linear(x, w);
  if (b.ndim() != 1 || b.extent(0) != w.extent(1)) {
    throw ShapeError("linear: bias must be (Dout), got " + shape_str(b.shape()));
  }
  return add_broadcast(y, b);
}

// ---------------------------------------------------------------------------
// layout ops (all realized as differentiable gathers)
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> pixel_shuffle(const TensorT<S>& x, std::size_t s) {
  require_rank4(x, "pixel_shuffle");
  if (s == 0) throw ShapeError("pixel_shuffle: scale must be positive");
  const std::size_t B = x.extent(0), H = x.extent(1), W = x.extent(2),
                    C = x.extent(3);
  if (C % (s * s) != 0) {
    throw ShapeError("pixel_shuffle: " + std::to_string(C) +
                     " channels not divisible by s^2 = " + std::to_string(s * s));
  }
  const std::size_t Cout = C / (s * s);
  const std::size_t oh = H * s, ow = W * s;
  std::vector<std::size_t> idx(B * oh * ow * Cout);
  std::size_t flat = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xq = 0; xq < ow; ++xq)
        for (std::size_t c = 0; c < Cout; ++c) {
          const std::size_t h = y / s, dy = y % s;
          const std::size_t w = xq / s, dx = xq % s;
          idx[flat++] = ((b * H + h) * W + w) * C + c * s * s + dy * s + dx;
        }
  return gather(x, {B, oh, ow, Cout}, std::move(idx));
}

template <class S>
TensorT<S> window_partition(const TensorT<S>& x, std::size_t m) {
  require_rank4(x, "window_partition");
  const std::size_t B = x.extent(0), H = x.extent(1), W = x.extent(2),
                    C = x.extent(3);
  if (m == 0 || H % m != 0 || W % m != 0) {
    throw ShapeError("window_partition: window " + std::to_string(m) +
                     " does not divide " + shape_str(x.shape()));
  }
  const std::size_t nh = H / m, nw = W / m;
  std::vector<std::size_t> idx(B * H * W * C);
  std::size_t flat = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t ty = 0; ty < nh; ++ty)
      for (std::size_t tx = 0; tx < nw; ++tx)
        for (std::size_t iy = 0; iy < m; ++iy)
          for (std::size_t ix = 0; ix < m; ++ix)
            for (std::size_t c = 0; c < C; ++c)
              idx[flat++] = ((b * H + ty * m + iy) * W + tx * m + ix) * C + c;
  return gather(x, {B * nh * nw, m * m, C}, std::move(idx));
}

template <class S>
TensorT<S> window_reverse(const TensorT<S>& windows, std::size_t m, std::size_t B,
                          std::size_t H, std::size_t W) {
  if (windows.ndim() != 3) {
    throw ShapeError("window_reverse: expected (num_windows, m*m, C), got " +
                     shape_str(windows.shape()));
  }
  if (m == 0 || H % m != 0 || W % m != 0) {
    throw ShapeError("window_reverse: window does not divide the target map");
  }
  const std::size_t nh = H / m, nw = W / m;
  const std::size_t C = windows.extent(2);
  if (windows.extent(0) != B * nh * nw || windows.extent(1) != m * m) {
    throw ShapeError("window_reverse: " + shape_str(windows.shape()) +
                     " does not tile a " + std::to_string(H) + "x" +
                     std::to_string(W) + " map with window " + std::to_string(m));
  }
  std::vector<std::size_t> idx(B * H * W * C);
  std::size_t flat = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t xq = 0; xq < W; ++xq)
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t win = (b * nh + y / m) * nw + xq / m;
          const std::size_t pos = (y % m) * m + xq % m;
          idx[flat++] = (win * m * m + pos) * C + c;
        }
  return gather(windows, {B, H, W, C}, std::move(idx));
}

template <class S>
TensorT<S> roll2d(const TensorT<S>& x, std::ptrdiff_t shift_y,
                  std::ptrdiff_t shift_x) {
  require_rank4(x, "roll2d");
  const std::size_t B = x.extent(0), H = x.extent(1), W = x.extent(2),
                    C = x.extent(3);
  const auto wrap = [](std::ptrdiff_t v, std::size_t n) {
    const auto sn = static_cast<std::ptrdiff_t>(n);
    return static_cast<std::size_t>(((v % sn) + sn) % sn);
  };
  std::vector<std::size_t> idx(x.size());
  std::size_t flat = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t y = 0; y < H; ++y) {
      const std::size_t sy = wrap(static_cast<std::ptrdiff_t>(y) - shift_y, H);
      for (std::size_t xq = 0; xq < W; ++xq) {
        const std::size_t sx = wrap(static_cast<std::ptrdiff_t>(xq) - shift_x, W);
        const std::size_t base = ((b * H + sy) * W + sx) * C;
        for (std::size_t c = 0; c < C; ++c) idx[flat++] = base + c;
      }
    }
  return gather(x, x.shape(), std::move(idx));
}

// ---------------------------------------------------------------------------
// layer_norm
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> layer_norm(const TensorT<S>& x, const TensorT<S>& gamma,
                      const TensorT<S>& beta, double eps) {
  const std::size_t C = x.shape().back();
  if (gamma.ndim() != 1 || gamma.extent(0) != C || beta.ndim() != 1 ||
      beta.extent(0) != C) {
    throw ShapeError("layer_norm: affine params must be (" + std::to_string(C) +
                     "), got " + shape_str(gamma.shape()) + " and " +
                     shape_str(beta.shape()));
  }
  const std::size_t rows = x.size() / C;
  std::vector<S> out(x.size());
  std::vector<S> xhat(x.size());
  std::vector<S> inv_std(rows);
  const S* px = x.data().data();
  const S* pg = gamma.data().data();
  const S* pb = beta.data().data();
  parallel_for(rows, [&](std::size_t r) {
    const S* row = px + r * C;
    S mu = S(0);
    for (std::size_t j = 0; j < C; ++j) mu += row[j];
    mu /= static_cast<S>(C);
    S var = S(0);
    for (std::size_t j = 0; j < C; ++j) {
      const S d = row[j] - mu;
      var += d * d;
    }
    var /= static_cast<S>(C);
    const S is = S(1) / std::sqrt(var + static_cast<S>(eps));
    inv_std[r] = is;
    for (std::size_t j = 0; j < C; ++j) {
      const S xh = (row[j] - mu) * is;
      xhat[r * C + j] = xh;
      out[r * C + j] = pg[j] * xh + pb[j];
    }
  }, 64);
  return make_op<S>(
      x.shape(), std::move(out), {x, gamma, beta},
      [xn = x.node(), gn = gamma.node(), bn = beta.node(),
       xhat = std::move(xhat), inv_std = std::move(inv_std), rows, C](NodeT<S>& o) {
        const S* pg = gn->value.data();
        if (xn->requires_grad) {
          xn->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            const S* dy = o.grad.data() + r * C;
            const S* xh = xhat.data() + r * C;
            S m1 = S(0), m2 = S(0);
            for (std::size_t j = 0; j < C; ++j) {
              const S gdy = pg[j] * dy[j];
              m1 += gdy;
              m2 += gdy * xh[j];
            }
            m1 /= static_cast<S>(C);
            m2 /= static_cast<S>(C);
            S* gx = xn->grad.data() + r * C;
            for (std::size_t j = 0; j < C; ++j) {
              gx[j] += (pg[j] * dy[j] - m1 - xh[j] * m2) * inv_std[r];
            }
          }
        }
        if (gn->requires_grad) {
          gn->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            const S* dy = o.grad.data() + r * C;
            const S* xh = xhat.data() + r * C;
            for (std::size_t j = 0; j < C; ++j) gn->grad[j] += dy[j] * xh[j];
          }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            const S* dy = o.grad.data() + r * C;
            for (std::size_t j = 0; j < C; ++j) bn->grad[j] += dy[j];
          }
        }
      });
}

// ---------------------------------------------------------------------------
// gelu
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> gelu(const TensorT<S>& x) {
  const std::size_t n = x.size();
  constexpr double kC0 = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kC1 = 0.044715;
  std::vector<S> out(n);
  const S* px = x.data().data();
  parallel_for(n, [&](std::size_t i) {
    const double v = px[i];
    const double u = kC0 * (v + kC1 * v * v * v);
    out[i] = static_cast<S>(0.5 * v * (1.0 + std::tanh(u)));
  });
  return make_op<S>(x.shape(), std::move(out), {x},
                    [xn = x.node(), n](NodeT<S>& o) {
                      xn->ensure_grad();
                      for (std::size_t i = 0; i < n; ++i) {
                        const double v = xn->value[i];
                        const double u = kC0 * (v + kC1 * v * v * v);
                        const double t = std::tanh(u);
                        const double du = kC0 * (1.0 + 3.0 * kC1 * v * v);
                        const double d =
                            0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
                        xn->grad[i] += o.grad[i] * static_cast<S>(d);
                      }
                    });
}

// ---------------------------------------------------------------------------
// patch merge / expand
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> patch_merge(const TensorT<S>& x, const TensorT<S>& gamma,
                       const TensorT<S>& beta, const TensorT<S>& w) {
  require_rank4(x, "patch_merge");
  const std::size_t B = x.extent(0), H = x.extent(1), W = x.extent(2),
                    C = x.extent(3);
  if (H % 2 != 0 || W % 2 != 0) {
    throw ShapeError("patch_merge: spatial extents must be even, got " +
                     shape_str(x.shape()));
  }
  if (w.ndim() != 2 || w.extent(0) != 4 * C || w.extent(1) != 2 * C) {
    throw ShapeError("patch_merge: reduction weights must be (4C,2C), got " +
                     shape_str(w.shape()));
  }
  const std::size_t oh = H / 2, ow = W / 2;
  // channel blocks: top-left, bottom-left, top-right, bottom-right
  const std::size_t offs[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  std::vector<std::size_t> idx(B * oh * ow * 4 * C);
  std::size_t flat = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xq = 0; xq < ow; ++xq)
        for (const auto& off : offs) {
          const std::size_t base =
              ((b * H + 2 * y + off[0]) * W + 2 * xq + off[1]) * C;
          for (std::size_t c = 0; c < C; ++c) idx[flat++] = base + c;
        }
  auto grouped = gather(x, {B, oh, ow, 4 * C}, std::move(idx));
  return linear(layer_norm(grouped, gamma, beta), w);
}

template <class S>
TensorT<S> patch_expand(const TensorT<S>& x, const TensorT<S>& w) {
  require_rank4(x, "patch_expand");
  const std::size_t C = x.extent(3);
  if (C % 2 != 0) {
    throw ShapeError("patch_expand: channel count must be even, got " +
                     std::to_string(C));
  }
  if (w.ndim() != 2 || w.extent(0) != C || w.extent(1) != 2 * C) {
    throw ShapeError("patch_expand: expansion weights must be (C,2C), got " +
                     shape_str(w.shape()));
  }
  return pixel_shuffle(linear(x, w), 2);
}

// ---------------------------------------------------------------------------
// bicubic_resize
// ---------------------------------------------------------------------------

namespace {

inline double keys_kernel(double t) {
  constexpr double a = -0.5;
  const double at = std::abs(t);
  if (at <= 1.0) return ((a + 2.0) * at - (a + 3.0)) * at * at + 1.0;
  if (at < 2.0) return (((at - 5.0) * at + 8.0) * at - 4.0) * a;
  return 0.0;
}

struct CubicTap {
  std::size_t i[4];
  double w[4];
};

// Tap positions and weights per output coordinate, half-pixel convention.
inline std::vector<CubicTap> cubic_taps(std::size_t in, std::size_t out) {
  std::vector<CubicTap> taps(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double src = (o + 0.5) * ratio - 0.5;
    const double base = std::floor(src);
    const double frac = src - base;
    for (int k = 0; k < 4; ++k) {
      const auto raw = static_cast<std::ptrdiff_t>(base) + k - 1;
      const auto clamped =
          std::clamp<std::ptrdiff_t>(raw, 0, static_cast<std::ptrdiff_t>(in) - 1);
      taps[o].i[k] = static_cast<std::size_t>(clamped);
      taps[o].w[k] = keys_kernel(frac - static_cast<double>(k - 1));
    }
  }
  return taps;
}

}  // namespace

template <class S>
TensorT<S> bicubic_resize(const TensorT<S>& x, std::size_t out_h,
                          std::size_t out_w) {
  if (x.ndim() == 3) {  // single (H,W,C) image
    TensorT<S> batched =
        reshape(x, {std::size_t{1}, x.extent(0), x.extent(1), x.extent(2)});
    return reshape(bicubic_resize(batched, out_h, out_w),
                   {out_h, out_w, x.extent(2)});
  }
  require_rank4(x, "bicubic_resize");
  if (x.requires_grad()) {
    throw ValueError("bicubic_resize: fixed resampler, input must not require grad");
  }
  if (out_h == 0 || out_w == 0) {
    throw ShapeError("bicubic_resize: output extents must be positive");
  }
  const std::size_t B = x.extent(0), H = x.extent(1), W = x.extent(2),
                    C = x.extent(3);
  const auto wtaps = cubic_taps(W, out_w);
  const auto htaps = cubic_taps(H, out_h);
  const S* px = x.data().data();

  // width pass
  std::vector<double> mid(B * H * out_w * C);
  parallel_for(B * H * out_w, [&](std::size_t flat) {
    const std::size_t ox = flat % out_w;
    const std::size_t rest = flat / out_w;
    const std::size_t y = rest % H;
    const std::size_t b = rest / H;
    const CubicTap& t = wtaps[ox];
    const S* row = px + (b * H + y) * W * C;
    double* dst = mid.data() + flat * C;
    for (std::size_t c = 0; c < C; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.w[k] * static_cast<double>(row[t.i[k] * C + c]);
      dst[c] = acc;
    }
  }, 256);

  // height pass
  std::vector<S> out(B * out_h * out_w * C);
  parallel_for(B * out_h * out_w, [&](std::size_t flat) {
    const std::size_t ox = flat % out_w;
    const std::size_t rest = flat / out_w;
    const std::size_t oy = rest % out_h;
    const std::size_t b = rest / out_h;
    const CubicTap& t = htaps[oy];
    S* dst = out.data() + flat * C;
    for (std::size_t c = 0; c < C; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k)
        acc += t.w[k] * mid[((b * H + t.i[k]) * out_w + ox) * C + c];
      dst[c] = static_cast<S>(acc);
    }
  }, 256);
  return TensorT<S>::from_vector({B, out_h, out_w, C}, std::move(out));
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> l1_loss(const TensorT<S>& pred, const TensorT<S>& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("l1_loss: shape mismatch " + shape_str(pred.shape()) +
                     " vs " + shape_str(target.shape()));
  }
  const std::size_t n = pred.size();
  const S* pp = pred.data().data();
  const S* pt = target.data().data();
  S acc = S(0);
  for (std::size_t i = 0; i < n; ++i) acc += std::abs(pp[i] - pt[i]);
  acc /= static_cast<S>(n);
  return make_op<S>({1}, {acc}, {pred, target},
                    [pn = pred.node(), tn = target.node(), n](NodeT<S>& o) {
                      const S g = o.grad[0] / static_cast<S>(n);
                      // sign(0) = 0 subgradient
                      const auto sgn = [](S d) {
                        return d > S(0) ? S(1) : (d < S(0) ? S(-1) : S(0));
                      };
                      if (pn->requires_grad) {
                        pn->ensure_grad();
                        for (std::size_t i = 0; i < n; ++i)
                          pn->grad[i] += g * sgn(pn->value[i] - tn->value[i]);
                      }
                      if (tn->requires_grad) {
                        tn->ensure_grad();
                        for (std::size_t i = 0; i < n; ++i)
                          tn->grad[i] -= g * sgn(pn->value[i] - tn->value[i]);
                      }
                    });
}

template <class S>
TensorT<S> bce_with_logits_mean(const TensorT<S>& logits,
                                const TensorT<S>& targets) {
  if (logits.shape() != targets.shape()) {
    throw ShapeError("bce_with_logits_mean: shape mismatch " +
                     shape_str(logits.shape()) + " vs " +
                     shape_str(targets.shape()));
  }
  const std::size_t n = logits.size();
  const S* pz = logits.data().data();
  const S* pt = targets.data().data();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = pz[i], t = pt[i];
    acc += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
  }
  acc /= static_cast<double>(n);
  return make_op<S>(
      {1}, {static_cast<S>(acc)}, {logits, targets},
      [zn = logits.node(), tn = targets.node(), n](NodeT<S>& o) {
        const S g = o.grad[0] / static_cast<S>(n);
        if (zn->requires_grad) {
          zn->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            const double z = zn->value[i];
            const double sig = 1.0 / (1.0 + std::exp(-z));
            zn->grad[i] += g * static_cast<S>(sig - tn->value[i]);
          }
        }
        if (tn->requires_grad) {
          tn->ensure_grad();
          for (std::size_t i = 0; i < n; ++i)
            tn->grad[i] -= g * zn->value[i];
        }
      });
}

// ---------------------------------------------------------------------------
// explicit instantiations
// ---------------------------------------------------------------------------

#define SRLITE_INSTANTIATE_OPS(S)                                            \
  template TensorT<S> conv2d<S>(const TensorT<S>&, const TensorT<S>&,        \
                                std::size_t);                                \
  template TensorT<S> conv2d<S>(const TensorT<S>&, const TensorT<S>&,        \
                                const TensorT<S>&, std::size_t);             \
  template TensorT<S> linear<S>(const TensorT<S>&, const TensorT<S>&);       \
  template TensorT<S> linear<S>(const TensorT<S>&, const TensorT<S>&,        \
                                const TensorT<S>&);                          \
  template TensorT<S> pixel_shuffle<S>(const TensorT<S>&, std::size_t);      \
  template TensorT<S> window_partition<S>(const TensorT<S>&, std::size_t);   \
  template TensorT<S> window_reverse<S>(const TensorT<S>&, std::size_t,      \
                                        std::size_t, std::size_t,            \
                                        std::size_t);                        \
  template TensorT<S> roll2d<S>(const TensorT<S>&, std::ptrdiff_t,           \
                                std::ptrdiff_t);                             \
  template TensorT<S> layer_norm<S>(const TensorT<S>&, const TensorT<S>&,    \
                                    const TensorT<S>&, double);              \
  template TensorT<S> gelu<S>(const TensorT<S>&);                            \
  template TensorT<S> patch_merge<S>(const TensorT<S>&, const TensorT<S>&,   \
                                     const TensorT<S>&, const TensorT<S>&);  \
  template TensorT<S> patch_expand<S>(const TensorT<S>&, const TensorT<S>&); \
  template TensorT<S> bicubic_resize<S>(const TensorT<S>&, std::size_t,      \
                                        std::size_t);                        \
  template TensorT<S> l1_loss<S>(const TensorT<S>&, const TensorT<S>&);      \
  template TensorT<S> bce_with_logits_mean<S>(const TensorT<S>&,             \
                                              const TensorT<S>&);

SRLITE_INSTANTIATE_OPS(float)
SRLITE_INSTANTIATE_OPS(double)

#undef SRLITE_INSTANTIATE_OPS

}  // namespace srlite
