#include "srlite/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "srlite/ops.hpp"
#include "srlite/rng.hpp"

namespace srlite {

namespace {

Tensor clamp01(const Tensor& t) {
  std::vector<float> v(t.data().begin(), t.data().end());
  for (float& x : v) x = std::clamp(x, 0.0f, 1.0f);
  return Tensor::from_vector(Shape(t.shape()), std::move(v));
}

double clamp01d(double x) { return x < 0 ? 0 : (x > 1 ? 1 : x); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shapes differ, " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

// ---- synthetic renderers ---------------------------------------------------

constexpr double kPi = std::numbers::pi;

void render_gradient(std::vector<double>& px, std::size_t n, Rng& rng) {
  const double theta = rng.uniform() * 2 * kPi;
  const double freq = 0.5 + rng.uniform();
  const double phase = rng.uniform();
  double c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = 0.05 + 0.9 * rng.uniform();
    c1[c] = 0.05 + 0.9 * rng.uniform();
  }
  const double cs = std::cos(theta), sn = std::sin(theta);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double proj = (cs * static_cast<double>(x) + sn * static_cast<double>(y)) /
                          static_cast<double>(n);
      const double t = 0.5 + 0.5 * std::sin(2 * kPi * (freq * proj + phase));
      for (int c = 0; c < 3; ++c) {
        px[(y * n + x) * 3 + c] = c0[c] + (c1[c] - c0[c]) * t;
      }
    }
  }
}

void render_ellipses(std::vector<double>& px, std::size_t n, Rng& rng) {
  const double base = 0.2 + 0.6 * rng.uniform();
  std::fill(px.begin(), px.end(), base);
  const std::size_t count = 3 + rng.uniform_index(4);
  for (std::size_t e = 0; e < count; ++e) {
    const double cx = (0.15 + 0.7 * rng.uniform()) * n;
    const double cy = (0.15 + 0.7 * rng.uniform()) * n;
    const double ax = (0.08 + 0.22 * rng.uniform()) * n;
    const double ay = (0.08 + 0.22 * rng.uniform()) * n;
    const double rot = rng.uniform() * kPi;
    const double sharp = 3.0 + 3.0 * rng.uniform();
    double col[3];
    for (int c = 0; c < 3; ++c) col[c] = 0.05 + 0.9 * rng.uniform();
    const double cs = std::cos(rot), sn = std::sin(rot);
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        const double u = (cs * dx + sn * dy) / ax;
        const double v = (-sn * dx + cs * dy) / ay;
        const double d = u * u + v * v;
        const double alpha = clamp01d(0.5 + (1.0 - d) * sharp * 0.5);
        if (alpha <= 0) continue;
        for (int c = 0; c < 3; ++c) {
          double& p = px[(y * n + x) * 3 + c];
          p = alpha * col[c] + (1.0 - alpha) * p;
        }
      }
    }
  }
}

double segment_distance(double x, double y, double x0, double y0, double x1,
                        double y1) {
  const double vx = x1 - x0, vy = y1 - y0;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((x - x0) * vx + (y - y0) * vy) / len2 : 0.0;
  t = clamp01d(t);
  const double px = x0 + t * vx, py = y0 + t * vy;
  return std::hypot(x - px, y - py);
}

void render_strokes(std::vector<double>& px, std::size_t n, Rng& rng) {
  const double base = 0.75 + 0.2 * rng.uniform();
  std::fill(px.begin(), px.end(), base);
  const std::size_t count = 6 + rng.uniform_index(7);
  for (std::size_t sgi = 0; sgi < count; ++sgi) {
    const double x0 = rng.uniform() * n, y0 = rng.uniform() * n;
    const double ang = rng.uniform() * 2 * kPi;
    const double len = (0.15 + 0.35 * rng.uniform()) * n;
    const double x1 = x0 + std::cos(ang) * len, y1 = y0 + std::sin(ang) * len;
    const double r = std::max(0.75, (0.01 + 0.03 * rng.uniform()) * n);
    const double ink = 0.05 + 0.35 * rng.uniform();
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const double d = segment_distance(x + 0.5, y + 0.5, x0, y0, x1, y1);
        const double alpha = clamp01d(r - d + 0.5);
        if (alpha <= 0) continue;
        for (int c = 0; c < 3; ++c) {
          double& p = px[(y * n + x) * 3 + c];
          p = alpha * ink + (1.0 - alpha) * p;
        }
      }
    }
  }
}

}  // namespace

Tensor center_crop_square(const Tensor& img) {
  if (img.ndim() != 3) {
    throw ShapeError("center_crop_square expects (H,W,C), got " +
                     shape_str(img.shape()));
  }
  const std::size_t H = img.extent(0), W = img.extent(1), C = img.extent(2);
  const std::size_t a = std::min(H, W);
  const std::size_t yo = (H - a) / 2, xo = (W - a) / 2;
  if (yo == 0 && xo == 0 && H == W) return img;
  return slice(img, {yo, xo, 0}, {a, a, C});
}

PairedSample degrade_pair(const Tensor& img, std::size_t hr_size,
                          std::size_t s) {
  if (img.ndim() != 3) {
    throw ShapeError("degrade_pair expects (H,W,C), got " +
                     shape_str(img.shape()));
  }
  if (img.extent(0) < 2 || img.extent(1) < 2) {
    throw ValueError("degrade_pair: image smaller than 2x2");
  }
  if (s == 0 || hr_size == 0 || hr_size % s != 0) {
    throw ValueError("degrade_pair: scale " + std::to_string(s) +
                     " must divide hr_size " + std::to_string(hr_size));
  }
  const Tensor crop = center_crop_square(img);
  PairedSample p;
  p.hr = clamp01(bicubic_resize(crop, hr_size, hr_size));
  p.lr = clamp01(bicubic_resize(p.hr, hr_size / s, hr_size / s));
  return p;
}

double psnr(const Tensor& a, const Tensor& b, double max_val) {
  require_same_shape(a, b, "psnr");
  if (max_val <= 0) throw ValueError("psnr: max_val must be positive");
  const std::span<const float> av = a.data(), bv = b.data();
  double se = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = static_cast<double>(av[i]) - static_cast<double>(bv[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(av.size());
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse);
}

double ssim(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "ssim");
  if (a.ndim() != 2 && a.ndim() != 3) {
    throw ShapeError("ssim expects (H,W) or (H,W,C), got " +
                     shape_str(a.shape()));
  }
  const std::size_t H = a.extent(0), W = a.extent(1);
  const std::size_t C = a.ndim() == 3 ? a.extent(2) : 1;
  constexpr std::size_t win = 11;
  if (H < win || W < win) {
    throw ShapeError("ssim: image " + shape_str(a.shape()) +
                     " is smaller than the 11x11 window");
  }

  std::vector<double> ga(H * W), gb(H * W);
  for (std::size_t i = 0; i < H * W; ++i) {
    double sa = 0, sb = 0;
    for (std::size_t c = 0; c < C; ++c) {
      sa += a.data()[i * C + c];
      sb += b.data()[i * C + c];
    }
    ga[i] = sa / static_cast<double>(C);
    gb[i] = sb / static_cast<double>(C);
  }

  double kernel[win * win];
  double ksum = 0;
  constexpr double sigma = 1.5;
  for (std::size_t ky = 0; ky < win; ++ky) {
    for (std::size_t kx = 0; kx < win; ++kx) {
      const double dy = static_cast<double>(ky) - 5.0;
      const double dx = static_cast<double>(kx) - 5.0;
      kernel[ky * win + kx] = std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
      ksum += kernel[ky * win + kx];
    }
  }
  for (double& k : kernel) k /= ksum;

  constexpr double c1 = 0.01 * 0.01;  // (K1 * L)^2 at L = 1
  constexpr double c2 = 0.03 * 0.03;
  double total = 0;
  std::size_t count = 0;
  for (std::size_t y0 = 0; y0 + win <= H; ++y0) {
    for (std::size_t x0 = 0; x0 + win <= W; ++x0) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (std::size_t ky = 0; ky < win; ++ky) {
        for (std::size_t kx = 0; kx < win; ++kx) {
          const double k = kernel[ky * win + kx];
          const double va = ga[(y0 + ky) * W + (x0 + kx)];
          const double vb = gb[(y0 + ky) * W + (x0 + kx)];
          mu_a += k * va;
          mu_b += k * vb;
          aa += k * va * va;
          bb += k * vb * vb;
          ab += k * va * vb;
        }
      }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double num = (2 * mu_a * mu_b + c1) * (2 * cov + c2);
      const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

std::vector<PairedSample> synth_dataset(std::uint64_t seed, std::size_t n,
                                        std::size_t hr_size, std::size_t s) {
  if (n == 0) throw ValueError("synth_dataset: n must be at least 1");
  std::vector<PairedSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, "synth", i);
    std::vector<double> px(hr_size * hr_size * 3);
    switch (i % 3) {
      case 0: render_gradient(px, hr_size, rng); break;
      case 1: render_ellipses(px, hr_size, rng); break;
      default: render_strokes(px, hr_size, rng); break;
    }
    std::vector<float> v(px.size());
    for (std::size_t j = 0; j < px.size(); ++j) {
      v[j] = static_cast<float>(clamp01d(px[j]));
    }
    Tensor img = Tensor::from_vector({hr_size, hr_size, 3}, std::move(v));
    out.push_back(degrade_pair(img, hr_size, s));
  }
  return out;
}

std::vector<std::string> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open manifest");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

Batch stack_batch(const std::vector<PairedSample>& data,
                  const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw ValueError("stack_batch: empty index list");
  for (std::size_t i : idx) {
    if (i >= data.size()) {
      throw ValueError("stack_batch: index " + std::to_string(i) +
                       " out of range");
    }
  }
  const Shape& ls = data[idx[0]].lr.shape();
  const Shape& hs = data[idx[0]].hr.shape();
  const std::size_t B = idx.size();
  std::vector<float> lv, hv;
  lv.reserve(B * shape_numel(ls));
  hv.reserve(B * shape_numel(hs));
  for (std::size_t i : idx) {
    if (data[i].lr.shape() != ls || data[i].hr.shape() != hs) {
      throw ShapeError("stack_batch: mixed sample shapes");
    }
    lv.insert(lv.end(), data[i].lr.data().begin(), data[i].lr.data().end());
    hv.insert(hv.end(), data[i].hr.data().begin(), data[i].hr.data().end());
  }
  Batch b;
  b.lr = Tensor::from_vector({B, ls[0], ls[1], ls[2]}, std::move(lv));
  b.hr = Tensor::from_vector({B, hs[0], hs[1], hs[2]}, std::move(hv));
  return b;
}

}  // namespace srlite
