#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "srlite/data.hpp"
#include "srlite/image.hpp"
#include "srlite/ops.hpp"
#include "srlite/rng.hpp"

using srlite::Shape;
using srlite::Tensor;

namespace {

Tensor rand_img(std::size_t h, std::size_t w, srlite::Rng& rng) {
  std::vector<float> v(h * w * 3);
  for (auto& x : v) x = static_cast<float>(rng.uniform());
  return Tensor::from_vector({h, w, 3}, std::move(v));
}

bool same_bits(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  auto da = a.data(), db = b.data();
  return std::equal(da.begin(), da.end(), db.begin());
}

// Straight double-precision SSIM of two single-channel images, written
// independently of the library code: explicit 2D window sums at every valid
// center, no separable filtering.
double ssim_scalar_ref(const std::vector<double>& a,
                       const std::vector<double>& b, std::size_t H,
                       std::size_t W) {
  const int R = 5;
  double win[11][11];
  double wsum = 0;
  for (int y = -R; y <= R; ++y) {
    for (int x = -R; x <= R; ++x) {
      const double g = std::exp(-(y * y + x * x) / (2.0 * 1.5 * 1.5));
      win[y + R][x + R] = g;
      wsum += g;
    }
  }
  for (auto& row : win) {
    for (auto& v : row) v /= wsum;
  }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  std::size_t count = 0;
  for (std::size_t cy = R; cy + R < H; ++cy) {
    for (std::size_t cx = R; cx + R < W; ++cx) {
      double ma = 0, mb = 0;
      for (int y = -R; y <= R; ++y) {
        for (int x = -R; x <= R; ++x) {
          const double wgt = win[y + R][x + R];
          ma += wgt * a[(cy + y) * W + (cx + x)];
          mb += wgt * b[(cy + y) * W + (cx + x)];
        }
      }
      double va = 0, vb = 0, cov = 0;
      for (int y = -R; y <= R; ++y) {
        for (int x = -R; x <= R; ++x) {
          const double wgt = win[y + R][x + R];
          const double da = a[(cy + y) * W + (cx + x)] - ma;
          const double db = b[(cy + y) * W + (cx + x)] - mb;
          va += wgt * da * da;
          vb += wgt * db * db;
          cov += wgt * da * db;
        }
      }
      total += (2 * ma * mb + c1) * (2 * cov + c2) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

TEST_CASE("ppm encode/decode round-trips byte-exact values") {
  std::vector<float> v(4 * 5 * 3);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<float>((i * 7) % 256) / 255.0f;
  }
  const Tensor img = Tensor::from_vector({4, 5, 3}, std::move(v));
  const auto bytes = srlite::encode_ppm(img);
  const Tensor back = srlite::decode_ppm(bytes);
  CHECK(same_bits(back, img));
  CHECK(srlite::encode_ppm(back) == bytes);
}

TEST_CASE("ppm file round-trip and header handling") {
  srlite::Rng rng(1);
  const Tensor img = rand_img(6, 4, rng);
  srlite::write_ppm("tmp_rt.ppm", img);
  const Tensor back = srlite::read_ppm("tmp_rt.ppm");
  CHECK(back.shape() == Shape{6, 4, 3});
  // Quantization to bytes moves each value by at most half a step.
  auto a = img.data(), b = back.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::fabs(a[i] - b[i]) <= 0.5f / 255.0f + 1e-6f);
  }
  std::remove("tmp_rt.ppm");

  const std::string with_comment = "P6 # comment\n# another\n2 1\n255\nabcdef";
  const std::vector<unsigned char> wc(with_comment.begin(), with_comment.end());
  CHECK(srlite::decode_ppm(wc).shape() == Shape{1, 2, 3});
}

TEST_CASE("ppm decode rejects malformed input") {
  const auto bytes = [](const std::string& s) {
    return std::vector<unsigned char>(s.begin(), s.end());
  };
  CHECK_THROWS_AS(srlite::decode_ppm(bytes("P5\n2 2\n255\n")), srlite::IoError);
  CHECK_THROWS_AS(srlite::decode_ppm(bytes("P6\n2 2\n65535\n")),
                  srlite::IoError);
  CHECK_THROWS_AS(srlite::decode_ppm(bytes("P6\n2 2\n255\nabc")),
                  srlite::IoError);
  CHECK_THROWS_AS(srlite::read_ppm("no_such_file.ppm"), srlite::IoError);
}

TEST_CASE("degradation produces the documented pair shapes") {
  srlite::Rng rng(2);
  const auto p1 = srlite::degrade_pair(rand_img(218, 178, rng), 256, 4);
  CHECK(p1.hr.shape() == Shape{256, 256, 3});
  CHECK(p1.lr.shape() == Shape{64, 64, 3});
  const auto p2 = srlite::degrade_pair(rand_img(178, 218, rng), 256, 4);
  CHECK(p2.hr.shape() == Shape{256, 256, 3});
  CHECK(p2.lr.shape() == Shape{64, 64, 3});
}

TEST_CASE("degradation preserves constant images") {
  const Tensor img = Tensor::full({100, 80, 3}, 0.37f);
  const auto p = srlite::degrade_pair(img, 64, 4);
  for (float v : p.hr.data()) CHECK(std::fabs(v - 0.37f) <= 1e-6f);
  for (float v : p.lr.data()) CHECK(std::fabs(v - 0.37f) <= 1e-6f);
}

TEST_CASE("square input skips the crop and matches the resize chain") {
  srlite::Rng rng(3);
  const Tensor img = rand_img(64, 64, rng);
  const auto p = srlite::degrade_pair(img, 32, 2);
  auto clamped = [](const Tensor& t) {
    std::vector<float> v(t.data().begin(), t.data().end());
    for (float& x : v) x = std::clamp(x, 0.0f, 1.0f);
    return Tensor::from_vector(Shape(t.shape()), std::move(v));
  };
  const Tensor hr = clamped(srlite::bicubic_resize(img, 32, 32));
  const Tensor lr = clamped(srlite::bicubic_resize(hr, 16, 16));
  CHECK(same_bits(p.hr, hr));
  CHECK(same_bits(p.lr, lr));
}

TEST_CASE("degradation input validation") {
  srlite::Rng rng(4);
  CHECK_THROWS_AS(srlite::degrade_pair(Tensor::zeros({1, 5, 3}), 16, 2),
                  srlite::ValueError);
  CHECK_THROWS_AS(srlite::degrade_pair(rand_img(8, 8, rng), 15, 2),
                  srlite::ValueError);
  CHECK_THROWS_AS(srlite::degrade_pair(Tensor::zeros({8, 8}), 16, 2),
                  srlite::ShapeError);
}

TEST_CASE("psnr reference points") {
  srlite::Rng rng(5);
  const Tensor a = rand_img(8, 8, rng);
  CHECK(std::isinf(srlite::psnr(a, a)));

  const Tensor zeros = Tensor::zeros({8, 8, 3});
  const Tensor ones = Tensor::full({8, 8, 3}, 1.0f);
  CHECK(srlite::psnr(zeros, ones) == 0.0);  // MSE is exactly max_val^2

  const Tensor half = Tensor::full({8, 8, 3}, 0.5f);
  std::vector<float> v(8 * 8 * 3, 0.5f + 1.0f / 255.0f);
  const Tensor off = Tensor::from_vector({8, 8, 3}, std::move(v));
  CHECK(srlite::psnr(half, off) == doctest::Approx(48.1308).epsilon(2e-5));
  CHECK(srlite::psnr(half, off) == srlite::psnr(off, half));
}

TEST_CASE("psnr strictly decreases with noise amplitude") {
  srlite::Rng rng(6);
  const Tensor base = rand_img(16, 16, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (const float amp : {0.01f, 0.02f, 0.04f}) {
    std::vector<float> v(base.data().begin(), base.data().end());
    srlite::Rng noise(7);  // same noise pattern, scaled
    for (float& x : v) x += amp * static_cast<float>(noise.uniform() - 0.5);
    const double p =
        srlite::psnr(base, Tensor::from_vector(Shape(base.shape()), std::move(v)));
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("ssim is exactly one for identical images") {
  srlite::Rng rng(8);
  const Tensor a = rand_img(16, 16, rng);
  CHECK(srlite::ssim(a, a) == 1.0);
}

TEST_CASE("ssim is negative for anti-correlated structure") {
  std::vector<float> v(16 * 16), w(16 * 16);
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 0; x < 16; ++x) {
      const float bit = static_cast<float>((x / 2 + y / 2) % 2);
      v[y * 16 + x] = bit;
      w[y * 16 + x] = 1.0f - bit;
    }
  }
  const Tensor a = Tensor::from_vector({16, 16}, std::move(v));
  const Tensor b = Tensor::from_vector({16, 16}, std::move(w));
  CHECK(srlite::ssim(a, b) < 0.0);
}

TEST_CASE("ssim matches an independent scalar implementation") {
  srlite::Rng rng(9);
  std::vector<float> gf(16 * 16), nf(16 * 16);
  std::vector<double> gd(16 * 16), nd(16 * 16);
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 0; x < 16; ++x) {
      const float g = static_cast<float>(x + y) / 30.0f;
      const float n = static_cast<float>(rng.uniform());
      gf[y * 16 + x] = g;
      nf[y * 16 + x] = n;
      gd[y * 16 + x] = g;
      nd[y * 16 + x] = n;
    }
  }
  const Tensor a = Tensor::from_vector({16, 16}, std::move(gf));
  const Tensor b = Tensor::from_vector({16, 16}, std::move(nf));
  const double lib = srlite::ssim(a, b);
  const double ref = ssim_scalar_ref(gd, nd, 16, 16);
  CHECK(std::fabs(lib - ref) <= 1e-6);
  // symmetric up to accumulation rounding (wgt*da*db rounds differently
  // under operand swap), not bit-exact
  CHECK(std::fabs(srlite::ssim(a, b) - srlite::ssim(b, a)) <= 1e-12);
}

TEST_CASE("ssim rejects images smaller than its window") {
  CHECK_THROWS_AS(srlite::ssim(Tensor::zeros({8, 8}), Tensor::zeros({8, 8})),
                  srlite::ShapeError);
}

TEST_CASE("synthetic dataset is deterministic and in range") {
  const auto d1 = srlite::synth_dataset(0, 5, 32, 2);
  const auto d2 = srlite::synth_dataset(0, 5, 32, 2);
  const auto d3 = srlite::synth_dataset(1, 5, 32, 2);
  REQUIRE(d1.size() == 5);
  bool any_diff = false;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(d1[i].hr.shape() == Shape{32, 32, 3});
    CHECK(d1[i].lr.shape() == Shape{16, 16, 3});
    CHECK(same_bits(d1[i].hr, d2[i].hr));
    CHECK(same_bits(d1[i].lr, d2[i].lr));
    any_diff = any_diff || !same_bits(d1[i].hr, d3[i].hr);
    for (float v : d1[i].hr.data()) {
      REQUIRE(v >= 0.0f);
      REQUIRE(v <= 1.0f);
    }
  }
  CHECK(any_diff);
}

TEST_CASE("stack_batch copies samples into contiguous batches") {
  const auto data = srlite::synth_dataset(3, 3, 32, 2);
  const auto b = srlite::stack_batch(data, {2, 0});
  REQUIRE(b.lr.shape() == Shape{2, 16, 16, 3});
  REQUIRE(b.hr.shape() == Shape{2, 32, 32, 3});
  const auto row = b.hr.data().subspan(0, 32 * 32 * 3);
  const auto src = data[2].hr.data();
  CHECK(std::equal(row.begin(), row.end(), src.begin()));
  CHECK_THROWS_AS(srlite::stack_batch(data, {}), srlite::ValueError);
  CHECK_THROWS_AS(srlite::stack_batch(data, {7}), srlite::ValueError);
}

TEST_CASE("manifest reader skips blanks and strips line endings") {
  {
    std::ofstream out("tmp_manifest.txt", std::ios::binary);
    out << "a.ppm\r\n\nsub/b.ppm\n\n";
  }
  const auto lines = srlite::read_manifest("tmp_manifest.txt");
  std::remove("tmp_manifest.txt");
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "a.ppm");
  CHECK(lines[1] == "sub/b.ppm");
}
