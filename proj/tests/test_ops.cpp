#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "srlite/ops.hpp"
#include "srlite/rng.hpp"
#include "srlite/tensor.hpp"

using srlite::backward;
using srlite::Shape;
using srlite::Tensor;
using srlite::TensorD;

namespace {

TensorD randn(Shape shape, srlite::Rng& rng, double sigma = 1.0) {
  std::vector<double> v(srlite::shape_numel(shape));
  for (auto& x : v) x = rng.normal() * sigma;
  return TensorD::from_vector(std::move(shape), std::move(v));
}

// im2col + dense triple-loop matmul; shares no code with the conv kernel.
std::vector<double> conv_oracle(const std::vector<double>& x, std::size_t B,
                                std::size_t H, std::size_t W, std::size_t Cin,
                                const std::vector<double>& w, std::size_t kh,
                                std::size_t kw, std::size_t Cout,
                                std::size_t pad) {
  const std::size_t cols = kh * kw * Cin;
  const std::size_t rows = B * H * W;
  std::vector<double> col(rows * cols, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t xx = 0; xx < W; ++xx) {
        double* dst = col.data() + ((b * H + y) * W + xx) * cols;
        for (std::size_t ky = 0; ky < kh; ++ky)
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) -
                                      static_cast<std::ptrdiff_t>(pad);
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + kx) -
                                      static_cast<std::ptrdiff_t>(pad);
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H) || sx < 0 ||
                sx >= static_cast<std::ptrdiff_t>(W))
              continue;
            for (std::size_t ci = 0; ci < Cin; ++ci)
              dst[(ky * kw + kx) * Cin + ci] =
                  x[((b * H + sy) * W + sx) * Cin + ci];
          }
      }
  std::vector<double> y(rows * Cout, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t co = 0; co < Cout; ++co) {
      double acc = 0.0;
      for (std::size_t k = 0; k < cols; ++k) acc += col[r * cols + k] * w[k * Cout + co];
      y[r * Cout + co] = acc;
    }
  return y;
}

double keys_ref(double t) {
  const double a = -0.5, at = std::abs(t);
  if (at <= 1.0) return (a + 2) * at * at * at - (a + 3) * at * at + 1;
  if (at < 2.0) return a * at * at * at - 5 * a * at * at + 8 * a * at - 4 * a;
  return 0.0;
}

// Direct 2D 4x4-tap evaluation per output pixel (not separable).
double bicubic_oracle_at(const std::vector<double>& img, std::size_t H,
                         std::size_t W, std::size_t C, std::size_t out_h,
                         std::size_t out_w, std::size_t oy, std::size_t ox,
                         std::size_t c) {
  const double sy = (oy + 0.5) * (static_cast<double>(H) / out_h) - 0.5;
  const double sx = (ox + 0.5) * (static_cast<double>(W) / out_w) - 0.5;
  const double by = std::floor(sy), bx = std::floor(sx);
  double acc = 0.0;
  for (int dy = -1; dy <= 2; ++dy)
    for (int dx = -1; dx <= 2; ++dx) {
      const double wy = keys_ref(sy - (by + dy));
      const double wx = keys_ref(sx - (bx + dx));
      const auto iy = std::clamp<std::ptrdiff_t>(
          static_cast<std::ptrdiff_t>(by) + dy, 0, static_cast<std::ptrdiff_t>(H) - 1);
      const auto ix = std::clamp<std::ptrdiff_t>(
          static_cast<std::ptrdiff_t>(bx) + dx, 0, static_cast<std::ptrdiff_t>(W) - 1);
      acc += wy * wx * img[(iy * W + ix) * C + c];
    }
  return acc;
}

void expect_grad_ok(const std::function<TensorD(const TensorD&)>& f,
                    const TensorD& x, double tol = 1e-6) {
  auto rep = srlite::grad_check<double>(f, x, tol);
  INFO("max_rel_err = " << rep.max_rel_err);
  CHECK(rep.pass);
}

}  // namespace

TEST_CASE("conv2d hand-counted examples") {
  auto x = TensorD::full({1, 3, 3, 1}, 1.0);
  auto w = TensorD::full({3, 3, 1, 1}, 1.0);
  auto y = srlite::conv2d(x, w, 1);
  CHECK(y.at({0, 1, 1, 0}) == doctest::Approx(9.0));
  CHECK(y.at({0, 0, 0, 0}) == doctest::Approx(4.0));
  CHECK(y.at({0, 2, 2, 0}) == doctest::Approx(4.0));
  CHECK(y.at({0, 0, 1, 0}) == doctest::Approx(6.0));
  CHECK(y.at({0, 1, 2, 0}) == doctest::Approx(6.0));

  // delta kernel passes the input through
  srlite::Rng rng(7);
  auto xr = randn({2, 4, 5, 3}, rng);
  std::vector<double> dw(3 * 3 * 3 * 3, 0.0);
  for (std::size_t c = 0; c < 3; ++c) dw[((1 * 3 + 1) * 3 + c) * 3 + c] = 1.0;
  auto wd = TensorD::from_vector({3, 3, 3, 3}, std::move(dw));
  auto yd = srlite::conv2d(xr, wd, 1);
  for (std::size_t i = 0; i < xr.size(); ++i)
    CHECK(yd.data()[i] == doctest::Approx(xr.data()[i]).epsilon(1e-12));

  CHECK_THROWS_AS(srlite::conv2d(xr, TensorD::zeros({3, 3, 4, 2}), 1),
                  srlite::ShapeError);
  CHECK_THROWS_AS(srlite::conv2d(xr, TensorD::zeros({3, 3, 3, 2}), 0),
                  srlite::ShapeError);
}

TEST_CASE("conv2d matches the im2col oracle on 20 random shapes") {
  srlite::Rng rng(2024);
  for (int cs = 0; cs < 20; ++cs) {
    const std::size_t B = 1 + rng.uniform_index(2);
    const std::size_t H = 3 + rng.uniform_index(6);
    const std::size_t W = 3 + rng.uniform_index(6);
    const std::size_t Cin = 1 + rng.uniform_index(4);
    const std::size_t Cout = 1 + rng.uniform_index(4);
    const std::size_t pad = rng.uniform_index(2);  // 0 -> 1x1, 1 -> 3x3
    const std::size_t k = 2 * pad + 1;
    auto x = randn({B, H, W, Cin}, rng);
    auto w = randn({k, k, Cin, Cout}, rng);
    auto got = srlite::conv2d(x, w, pad);
    auto want = conv_oracle(
        std::vector<double>(x.data().begin(), x.data().end()), B, H, W, Cin,
        std::vector<double>(w.data().begin(), w.data().end()), k, k, Cout, pad);
    REQUIRE(got.size() == want.size());
    double max_err = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i)
      max_err = std::max(max_err, std::abs(got.data()[i] - want[i]));
    CAPTURE(cs);
    CHECK(max_err <= 1e-6);
  }
}

TEST_CASE("conv2d with bias and its gradients") {
  srlite::Rng rng(31);
  auto x = randn({1, 5, 5, 2}, rng);
  auto w = randn({3, 3, 2, 3}, rng, 0.5);
  auto b = randn({3}, rng, 0.1);

  auto y = srlite::conv2d(x, w, b, 1);
  auto y0 = srlite::conv2d(x, w, 1);
  for (std::size_t i = 0; i < y.size(); ++i)
    CHECK(y.data()[i] == doctest::Approx(y0.data()[i] + b.data()[i % 3]).epsilon(1e-12));

  expect_grad_ok(
      [&](const TensorD& t) {
        auto out = srlite::conv2d(t, w, b, 1);
        return srlite::sum_all(srlite::mul(out, out));
      },
      x);
  expect_grad_ok(
      [&](const TensorD& t) {
        auto out = srlite::conv2d(x, t, b, 1);
        return srlite::sum_all(srlite::mul(out, out));
      },
      w);
  expect_grad_ok(
      [&](const TensorD& t) {
        auto out = srlite::conv2d(x, w, t, 1);
        return srlite::sum_all(srlite::mul(out, out));
      },
      b);
}

TEST_CASE("linear matches matmul plus bias and is differentiable") {
  srlite::Rng rng(17);
  auto x = randn({2, 3, 4}, rng);
  auto w = randn({4, 5}, rng);
  auto b = randn({5}, rng);
  auto y = srlite::linear(x, w, b);
  REQUIRE(y.shape() == Shape{2, 3, 5});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t o = 0; o < 5; ++o) {
        double acc = b.at({o});
        for (std::size_t k = 0; k < 4; ++k) acc += x.at({i, j, k}) * w.at({k, o});
        CHECK(y.at({i, j, o}) == doctest::Approx(acc).epsilon(1e-12));
      }
  expect_grad_ok(
      [&](const TensorD& t) {
        auto out = srlite::linear(x, t, b);
        return srlite::mean_all(srlite::mul(out, out));
      },
      w);
  CHECK_THROWS_AS(srlite::linear(x, TensorD::zeros({5, 4})), srlite::ShapeError);
}

TEST_CASE("pixel_shuffle rearrangement") {
  auto x = TensorD::from_vector({1, 1, 1, 4}, {1, 2, 3, 4});
  auto y = srlite::pixel_shuffle(x, 2);
  REQUIRE(y.shape() == Shape{1, 2, 2, 1});
  CHECK(y.at({0, 0, 0, 0}) == 1.0);
  CHECK(y.at({0, 0, 1, 0}) == 2.0);
  CHECK(y.at({0, 1, 0, 0}) == 3.0);
  CHECK(y.at({0, 1, 1, 0}) == 4.0);

  srlite::Rng rng(3);
  auto r = randn({2, 3, 4, 8}, rng);
  auto id = srlite::pixel_shuffle(r, 1);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(id.data()[i] == r.data()[i]);

  auto shuffled = srlite::pixel_shuffle(r, 2);
  REQUIRE(shuffled.shape() == Shape{2, 6, 8, 2});
  std::vector<double> a(r.data().begin(), r.data().end());
  std::vector<double> bvals(shuffled.data().begin(), shuffled.data().end());
  std::sort(a.begin(), a.end());
  std::sort(bvals.begin(), bvals.end());
  CHECK(a == bvals);  // bijection: multiset preserved

  CHECK_THROWS_AS(srlite::pixel_shuffle(r, 3), srlite::ShapeError);
}

TEST_CASE("window partition and reverse") {
  std::vector<double> v(16);
  for (std::size_t i = 0; i < 16; ++i) v[i] = static_cast<double>(i);
  auto x = TensorD::from_vector({1, 4, 4, 1}, std::move(v));
  auto wins = srlite::window_partition(x, 2);
  REQUIRE(wins.shape() == Shape{4, 4, 1});
  // top-left window holds positions (0,0),(0,1),(1,0),(1,1)
  CHECK(wins.at({0, 0, 0}) == 0.0);
  CHECK(wins.at({0, 1, 0}) == 1.0);
  CHECK(wins.at({0, 2, 0}) == 4.0);
  CHECK(wins.at({0, 3, 0}) == 5.0);
  // second window is the top-right tile
  CHECK(wins.at({1, 0, 0}) == 2.0);

  srlite::Rng rng(9);
  auto r = randn({2, 8, 8, 3}, rng);
  auto back = srlite::window_reverse(srlite::window_partition(r, 4), 4, 2, 8, 8);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(back.data()[i] == r.data()[i]);

  // shift, partition, reverse, unshift is also the identity
  auto cycle = srlite::roll2d(
      srlite::window_reverse(
          srlite::window_partition(srlite::roll2d(r, -2, -2), 4), 4, 2, 8, 8),
      2, 2);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(cycle.data()[i] == r.data()[i]);

  CHECK_THROWS_AS(srlite::window_partition(r, 3), srlite::ShapeError);
}

TEST_CASE("roll2d wraps cyclically") {
  std::vector<double> v(9);
  for (std::size_t i = 0; i < 9; ++i) v[i] = static_cast<double>(i);
  auto x = TensorD::from_vector({1, 3, 3, 1}, std::move(v));
  auto y = srlite::roll2d(x, 1, 0);  // content moves down one row
  CHECK(y.at({0, 0, 0, 0}) == 6.0);
  CHECK(y.at({0, 1, 0, 0}) == 0.0);
  auto z = srlite::roll2d(x, 0, -1);  // content moves left
  CHECK(z.at({0, 0, 0, 0}) == 1.0);
  CHECK(z.at({0, 0, 2, 0}) == 0.0);
}

TEST_CASE("layer_norm values") {
  auto g1 = TensorD::full({4}, 1.0);
  auto b0 = TensorD::zeros({4});
  auto c = TensorD::full({2, 4}, 3.7);
  auto yc = srlite::layer_norm(c, g1, b0);
  for (std::size_t i = 0; i < yc.size(); ++i)
    CHECK(yc.data()[i] == doctest::Approx(0.0).epsilon(1e-12));

  auto g2 = TensorD::full({2}, 1.0);
  auto z2 = TensorD::zeros({2});
  auto x = TensorD::from_vector({1, 2}, {1.0, -1.0});
  auto y = srlite::layer_norm(x, g2, z2);
  const double want = 1.0 / std::sqrt(1.0 + 1e-5);
  CHECK(y.at({0, 0}) == doctest::Approx(want).epsilon(1e-9));
  CHECK(y.at({0, 1}) == doctest::Approx(-want).epsilon(1e-9));

  srlite::Rng rng(23);
  auto r = randn({3, 5, 8}, rng, 2.0);
  auto g8 = TensorD::full({8}, 1.0);
  auto z8 = TensorD::zeros({8});
  auto yr = srlite::layer_norm(r, g8, z8);
  for (std::size_t row = 0; row < 15; ++row) {
    double mu = 0.0, var = 0.0;
    for (std::size_t j = 0; j < 8; ++j) mu += yr.data()[row * 8 + j];
    mu /= 8.0;
    for (std::size_t j = 0; j < 8; ++j) {
      const double d = yr.data()[row * 8 + j] - mu;
      var += d * d;
    }
    var /= 8.0;
    CHECK(std::abs(mu) <= 1e-6);
    CHECK(std::abs(var - 1.0) <= 1e-4);
  }
}

TEST_CASE("layer_norm gradients") {
  srlite::Rng rng(29);
  auto x = randn({2, 3, 6}, rng);
  auto gamma = randn({6}, rng, 0.5);
  auto beta = randn({6}, rng, 0.5);
  expect_grad_ok(
      [&](const TensorD& t) {
        auto y = srlite::layer_norm(t, gamma, beta);
        return srlite::sum_all(srlite::mul(y, y));
      },
      x);
  expect_grad_ok(
      [&](const TensorD& t) {
        auto y = srlite::layer_norm(x, t, beta);
        return srlite::sum_all(srlite::mul(y, y));
      },
      gamma);
  expect_grad_ok(
      [&](const TensorD& t) {
        auto y = srlite::layer_norm(x, gamma, t);
        return srlite::sum_all(srlite::mul(y, y));
      },
      beta);
}

TEST_CASE("gelu values and gradient") {
  auto z = TensorD::scalar(0.0);
  CHECK(srlite::gelu(z).item() == 0.0);
  auto big = TensorD::from_vector({2}, {8.0, -8.0});
  auto yb = srlite::gelu(big);
  CHECK(yb.at({0}) == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(yb.at({1}) == doctest::Approx(0.0).epsilon(1e-9));

  srlite::Rng rng(37);
  auto x = randn({3, 7}, rng);
  expect_grad_ok(
      [&](const TensorD& t) { return srlite::sum_all(srlite::gelu(t)); }, x);
}

TEST_CASE("patch_merge shape, gather order, gradients") {
  srlite::Rng rng(41);
  auto x8 = randn({1, 4, 4, 8}, rng);
  auto g = TensorD::full({32}, 1.0);
  auto b = TensorD::zeros({32});
  auto w = randn({32, 16}, rng, 0.2);
  auto y = srlite::patch_merge(x8, g, b, w);
  REQUIRE(y.shape() == Shape{1, 2, 2, 16});

  // gather order: C=1 cell whose grouped vector (tl,bl,tr,br) is already
  // zero-mean unit-variance, so layer norm leaves it (nearly) unchanged and
  // selector weights read out individual positions.
  const double s5 = std::sqrt(5.0);
  const double tl = 3 / s5, bl = 1 / s5, tr = -1 / s5, br = -3 / s5;
  auto cell = TensorD::from_vector({1, 2, 2, 1}, {tl, tr, bl, br});  // (y,x) layout
  auto g4 = TensorD::full({4}, 1.0);
  auto b4 = TensorD::zeros({4});
  std::vector<double> sel(4 * 2, 0.0);
  sel[0 * 2 + 0] = 1.0;  // first output channel <- grouped slot 0 (top-left)
  sel[1 * 2 + 1] = 1.0;  // second output channel <- grouped slot 1 (bottom-left)
  auto ws = TensorD::from_vector({4, 2}, std::move(sel));
  auto picked = srlite::patch_merge(cell, g4, b4, ws);
  REQUIRE(picked.shape() == Shape{1, 1, 1, 2});
  CHECK(picked.at({0, 0, 0, 0}) == doctest::Approx(tl).epsilon(1e-4));
  CHECK(picked.at({0, 0, 0, 1}) == doctest::Approx(bl).epsilon(1e-4));

  expect_grad_ok(
      [&](const TensorD& t) {
        auto out = srlite::patch_merge(t, g, b, w);
        return srlite::sum_all(srlite::mul(out, out));
      },
      x8);
  expect_grad_ok(
      [&](const TensorD& t) {
        auto out = srlite::patch_merge(x8, g, b, t);
        return srlite::sum_all(srlite::mul(out, out));
      },
      w);
  CHECK_THROWS_AS(srlite::patch_merge(randn({1, 3, 4, 8}, rng), g, b, w),
                  srlite::ShapeError);
}

TEST_CASE("patch_expand shape, linearity, gradient") {
  srlite::Rng rng(43);
  auto x = randn({1, 2, 2, 16}, rng);
  auto w = randn({16, 32}, rng, 0.2);
  auto y = srlite::patch_expand(x, w);
  REQUIRE(y.shape() == Shape{1, 4, 4, 8});

  auto y2 = srlite::patch_expand(srlite::scale(x, 3.0), w);
  for (std::size_t i = 0; i < y.size(); ++i)
    CHECK(y2.data()[i] == doctest::Approx(3.0 * y.data()[i]).epsilon(1e-12));

  // merge then expand restores the spatial/channel shape
  auto g = TensorD::full({32}, 1.0);
  auto b = TensorD::zeros({32});
  auto wm = randn({32, 16}, rng, 0.2);
  auto merged = srlite::patch_merge(y, g, b, wm);  // (1,2,2,16)
  auto we = randn({16, 32}, rng, 0.2);
  auto expanded = srlite::patch_expand(merged, we);
  CHECK(expanded.shape() == y.shape());

  expect_grad_ok(
      [&](const TensorD& t) {
        auto out = srlite::patch_expand(x, t);
        return srlite::sum_all(srlite::mul(out, out));
      },
      w);
}

TEST_CASE("bicubic constants, ramps, oracle") {
  // constants survive every scale change
  for (auto [oh, ow] : {std::pair<std::size_t, std::size_t>{32, 32},
                        {2, 2},
                        {11, 5}}) {
    auto c = TensorD::full({1, 8, 8, 3}, 0.6180339887);
    auto y = srlite::bicubic_resize(c, oh, ow);
    REQUIRE(y.shape() == Shape{1, oh, ow, 3});
    for (std::size_t i = 0; i < y.size(); ++i)
      CHECK(std::abs(y.data()[i] - 0.6180339887) <= 1e-6);
  }

  // a horizontal ramp stays linear in the interior after x2 upscale
  std::vector<double> ramp(8 * 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) ramp[y * 8 + x] = static_cast<double>(x);
  auto r = TensorD::from_vector({1, 8, 8, 1}, std::move(ramp));
  auto up = srlite::bicubic_resize(r, 16, 16);
  // interior output x maps to source (x+0.5)/2-0.5 = x/2 - 0.25
  for (std::size_t y = 4; y < 12; ++y)
    for (std::size_t x = 4; x < 12; ++x) {
      const double want = static_cast<double>(x) / 2.0 - 0.25;
      CHECK(std::abs(up.at({0, y, x, 0}) - want) <= 1e-5);
    }

  // checkerboard downscale against the direct per-pixel oracle
  std::vector<double> checker(8 * 8 * 2);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x)
      for (std::size_t c = 0; c < 2; ++c)
        checker[(y * 8 + x) * 2 + c] = ((x + y + c) % 2 == 0) ? 1.0 : 0.0;
  auto cb = TensorD::from_vector({1, 8, 8, 2}, checker);
  auto down = srlite::bicubic_resize(cb, 4, 4);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t c = 0; c < 2; ++c) {
        const double want = bicubic_oracle_at(checker, 8, 8, 2, 4, 4, y, x, c);
        CHECK(std::abs(down.at({0, y, x, c}) - want) <= 1e-5);
      }

  // random image, asymmetric scale, against the oracle
  srlite::Rng rng(47);
  auto img = randn({1, 6, 9, 3}, rng);
  std::vector<double> flat(img.data().begin(), img.data().end());
  auto res = srlite::bicubic_resize(img, 13, 4);
  for (std::size_t y = 0; y < 13; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const double want = bicubic_oracle_at(flat, 6, 9, 3, 13, 4, y, x, c);
        CHECK(std::abs(res.at({0, y, x, c}) - want) <= 1e-5);
      }

  auto tracked = TensorD::zeros({1, 4, 4, 1}, true);
  CHECK_THROWS_AS(srlite::bicubic_resize(tracked, 8, 8), srlite::ValueError);
}

TEST_CASE("l1 loss values and gradient") {
  auto a = TensorD::full({2, 3}, 0.0);
  auto b = TensorD::full({2, 3}, 1.0);
  CHECK(srlite::l1_loss(a, a).item() == 0.0);
  CHECK(srlite::l1_loss(a, b).item() == doctest::Approx(1.0));

  srlite::Rng rng(53);
  auto p = randn({4, 5}, rng);
  auto t = randn({4, 5}, rng);
  double want = 0.0;
  for (std::size_t i = 0; i < 20; ++i)
    want += std::abs(p.data()[i] - t.data()[i]);
  want /= 20.0;
  CHECK(std::abs(srlite::l1_loss(p, t).item() - want) <= 1e-7);

  expect_grad_ok([&](const TensorD& x) { return srlite::l1_loss(x, t); }, p);
  expect_grad_ok([&](const TensorD& x) { return srlite::l1_loss(p, x); }, t);
  CHECK_THROWS_AS(srlite::l1_loss(p, a), srlite::ShapeError);
}

TEST_CASE("bce with logits: values, stability, gradient") {
  auto z = TensorD::scalar(0.0);
  auto one = TensorD::scalar(1.0);
  auto zero = TensorD::scalar(0.0);
  CHECK(srlite::bce_with_logits_mean(z, one).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-7));
  CHECK(srlite::bce_with_logits_mean(z, zero).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-7));

  // extreme logits stay finite and near their asymptotes
  auto big = TensorD::from_vector({2}, {1000.0, -1000.0});
  auto t2 = TensorD::from_vector({2}, {1.0, 0.0});
  auto loss = srlite::bce_with_logits_mean(big, t2);
  CHECK(std::isfinite(loss.item()));
  CHECK(loss.item() == doctest::Approx(0.0).epsilon(1e-9));
  auto worst = srlite::bce_with_logits_mean(big, srlite::sub(TensorD::full({2}, 1.0), t2));
  CHECK(std::isfinite(worst.item()));

  srlite::Rng rng(59);
  auto logits = randn({6}, rng);
  std::vector<double> tv(6);
  for (auto& v : tv) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
  auto targets = TensorD::from_vector({6}, std::move(tv));
  expect_grad_ok(
      [&](const TensorD& x) { return srlite::bce_with_logits_mean(x, targets); },
      logits);
}

TEST_CASE("layout ops are differentiable") {
  srlite::Rng rng(61);
  auto x = randn({1, 4, 4, 4}, rng);
  expect_grad_ok(
      [&](const TensorD& t) {
        auto y = srlite::pixel_shuffle(t, 2);
        return srlite::sum_all(srlite::mul(y, y));
      },
      x);
  expect_grad_ok(
      [&](const TensorD& t) {
        auto y = srlite::window_partition(t, 2);
        return srlite::sum_all(srlite::mul(y, y));
      },
      x);
  expect_grad_ok(
      [&](const TensorD& t) {
        auto y = srlite::roll2d(t, 1, -2);
        return srlite::sum_all(srlite::mul(y, y));
      },
      x);
}
