#include "srlite/complexity.hpp"

#include <limits>
#include <sstream>

#include "srlite/profile.hpp"

namespace srlite {

namespace {

using u64 = std::uint64_t;
using i128 = unsigned __int128;

u64 narrow(i128 v) {
  if (v > static_cast<i128>(std::numeric_limits<u64>::max())) {
    throw ValueError("complexity count overflows 64 bits");
  }
  return static_cast<u64>(v);
}

// ---- shared closed-form pieces -------------------------------------------

u64 conv_params(u64 k, u64 cin, u64 cout) { return k * k * cin * cout + cout; }
u64 conv_madds(u64 k, u64 cin, u64 cout, u64 h, u64 w) {
  return k * k * cin * cout * h * w;
}
u64 linear_params(u64 din, u64 dout, bool bias) {
  return din * dout + (bias ? dout : 0);
}
u64 ln_params(u64 c) { return 2 * c; }

u64 msa_params(u64 C, u64 heads, u64 m) {
  return 4 * (C * C + C) + (2 * m - 1) * (2 * m - 1) * heads;
}
u64 msa_madds(u64 C, u64 m, u64 h, u64 w) {
  return 4 * h * w * C * C + 2 * m * m * h * w * C;
}

// Pre-norm attention block with the 4x MLP.
u64 swin_block_params(u64 C, u64 heads, u64 m) {
  return 2 * ln_params(C) + msa_params(C, heads, m) +
         linear_params(C, 4 * C, true) + linear_params(4 * C, C, true);
}
u64 swin_block_madds(u64 C, u64 m, u64 h, u64 w) {
  return msa_madds(C, m, h, w) + h * w * (C * 4 * C) + h * w * (4 * C * C);
}

u64 merge_params(u64 c) { return ln_params(4 * c) + linear_params(4 * c, 2 * c, false); }
u64 merge_madds(u64 c, u64 h, u64 w) {
  // (h/2)(w/2) merged positions, each a 4c -> 2c linear map.
  return (h / 2) * (w / 2) * (4 * c) * (2 * c);
}

// The four parallel branches of one multi-size block use the full window
// twice and the half window twice.
u64 mstb_params(const MswinConfig& cfg) {
  const u64 C = cfg.channels;
  const u64 heads = cfg.num_heads;
  u64 p = 0;
  const u64 windows[4] = {cfg.window, cfg.window, cfg.window / 2, cfg.window / 2};
  for (u64 m : windows) p += msa_params(C, heads, m) + ln_params(C);
  p += ln_params(4 * C);
  p += linear_params(4 * C, 2 * C, true) + linear_params(2 * C, C, true);
  return p;
}
u64 mstb_madds(const MswinConfig& cfg, u64 h, u64 w) {
  const u64 C = cfg.channels;
  u64 a = 0;
  const u64 windows[4] = {cfg.window, cfg.window, cfg.window / 2, cfg.window / 2};
  for (u64 m : windows) a += msa_madds(C, m, h, w);
  a += h * w * (4 * C * 2 * C) + h * w * (2 * C * C);
  return a;
}

}  // namespace

std::uint64_t eval_formula(CostFormula kind, std::uint64_t h, std::uint64_t w,
                           std::uint64_t C, std::uint64_t M) {
  if (h == 0 || w == 0 || C == 0 || M == 0) {
    throw ValueError("eval_formula arguments must be positive");
  }
  const i128 hw = static_cast<i128>(h) * w;
  const i128 c2 = static_cast<i128>(C) * C;
  const i128 m2 = static_cast<i128>(M) * M;
  switch (kind) {
    case CostFormula::wmsa:
      return narrow(4 * hw * c2 + 2 * m2 * hw * C);
    case CostFormula::rstb:
      return narrow(81 * hw * c2 + 12 * (m2 + 1) * hw * C);
    case CostFormula::swin_stage: {
      // 37/8 hwC^2 + 3/4 M^2hwC + 13/16 hwC over the common denominator 16,
      // rounded half up.
      const i128 num = 74 * hw * c2 + 12 * m2 * hw * C + 13 * hw * C;
      return narrow((num + 8) / 16);
    }
  }
  throw ValueError("unknown cost formula");
}

std::uint64_t mswinsr_params(const MswinConfig& cfg) {
  cfg.validate();
  const u64 C = cfg.channels;
  u64 p = conv_params(3, cfg.in_channels, C);
  for (u64 L : cfg.depth) {
    p += L * mstb_params(cfg) + conv_params(3, C, C);
  }
  p += conv_params(3, C, cfg.scale * cfg.scale * cfg.in_channels);
  return p;
}

std::uint64_t mswinsr_multiadds(const MswinConfig& cfg, std::uint64_t h,
                                std::uint64_t w) {
  cfg.validate();
  const u64 C = cfg.channels;
  u64 a = conv_madds(3, cfg.in_channels, C, h, w);
  for (u64 L : cfg.depth) {
    a += L * mstb_madds(cfg, h, w) + conv_madds(3, C, C, h, w);
  }
  a += conv_madds(3, C, cfg.scale * cfg.scale * cfg.in_channels, h, w);
  return a;
}

std::uint64_t ugswin_generator_params(const UgswinConfig& cfg) {
  cfg.validate();
  u64 p = conv_params(3, cfg.in_channels, cfg.channels);
  for (std::size_t k = 0; k < cfg.depth; ++k) {
    const u64 ck = cfg.level_channels(k);
    const u64 m = clamp_window(cfg.window, cfg.lr_size >> k);
    p += cfg.blocks_per_level * swin_block_params(ck, cfg.num_heads, m);
    p += merge_params(ck);
  }
  {
    const u64 cd = cfg.level_channels(cfg.depth);
    const u64 m = clamp_window(cfg.window, cfg.lr_size >> cfg.depth);
    p += cfg.blocks_per_level * swin_block_params(cd, cfg.num_heads, m);
  }
  for (std::size_t k = cfg.depth; k-- > 0;) {
    const u64 ck = cfg.level_channels(k);
    const u64 ck1 = cfg.level_channels(k + 1);
    const u64 m = clamp_window(cfg.window, cfg.lr_size >> k);
    p += linear_params(ck1, 2 * ck1, false);      // expand
    p += linear_params(2 * ck, ck, true);         // skip fusion
    p += cfg.blocks_per_level * swin_block_params(ck, cfg.num_heads, m);
  }
  p += conv_params(3, cfg.channels, cfg.scale * cfg.scale * cfg.in_channels);
  return p;
}

std::uint64_t ugswin_generator_multiadds(const UgswinConfig& cfg,
                                         std::uint64_t h, std::uint64_t w) {
  cfg.validate();
  u64 a = conv_madds(3, cfg.in_channels, cfg.channels, h, w);
  for (std::size_t k = 0; k < cfg.depth; ++k) {
    const u64 ck = cfg.level_channels(k);
    const u64 m = clamp_window(cfg.window, cfg.lr_size >> k);
    const u64 hk = h >> k, wk = w >> k;
    a += cfg.blocks_per_level * swin_block_madds(ck, m, hk, wk);
    a += merge_madds(ck, hk, wk);
  }
  {
    const u64 cd = cfg.level_channels(cfg.depth);
    const u64 m = clamp_window(cfg.window, cfg.lr_size >> cfg.depth);
    a += cfg.blocks_per_level *
         swin_block_madds(cd, m, h >> cfg.depth, w >> cfg.depth);
  }
  for (std::size_t k = cfg.depth; k-- > 0;) {
    const u64 ck = cfg.level_channels(k);
    const u64 ck1 = cfg.level_channels(k + 1);
    const u64 m = clamp_window(cfg.window, cfg.lr_size >> k);
    const u64 hk = h >> k, wk = w >> k;
    a += (hk / 2) * (wk / 2) * ck1 * (2 * ck1);   // expand
    a += hk * wk * (2 * ck) * ck;                 // skip fusion
    a += cfg.blocks_per_level * swin_block_madds(ck, m, hk, wk);
  }
  a += conv_madds(3, cfg.channels, cfg.scale * cfg.scale * cfg.in_channels, h, w);
  return a;
}

std::uint64_t ugswin_discriminator_params(const UgswinConfig& cfg) {
  cfg.validate();
  u64 p = conv_params(3, cfg.in_channels, cfg.channels);
  u64 ch = cfg.channels;
  for (u64 size = cfg.hr_size(); size > cfg.window; size /= 2) {
    p += cfg.blocks_per_level * swin_block_params(ch, cfg.num_heads, cfg.window);
    p += merge_params(ch);
    ch *= 2;
  }
  p += ln_params(ch) + linear_params(ch, 1, true);
  return p;
}

std::uint64_t ugswin_discriminator_multiadds(const UgswinConfig& cfg,
                                             std::uint64_t h, std::uint64_t w) {
  cfg.validate();
  u64 a = conv_madds(3, cfg.in_channels, cfg.channels, h, w);
  u64 ch = cfg.channels;
  u64 hh = h, ww = w;
  for (u64 size = cfg.hr_size(); size > cfg.window; size /= 2) {
    a += cfg.blocks_per_level * swin_block_madds(ch, cfg.window, hh, ww);
    a += merge_madds(ch, hh, ww);
    ch *= 2;
    hh /= 2;
    ww /= 2;
  }
  a += ch;  // classifier head on the pooled vector, batch 1
  return a;
}

std::uint64_t measure_multiadds(const std::function<void()>& run) {
  std::uint64_t count = 0;
  std::uint64_t* previous = profile::multiadd_counter();
  profile::set_multiadd_counter(&count);
  try {
    run();
  } catch (...) {
    profile::set_multiadd_counter(previous);
    throw;
  }
  profile::set_multiadd_counter(previous);
  return count;
}

ComplexityReport analyze_mswinsr(const MswinConfig& cfg, std::uint64_t h,
                                 std::uint64_t w) {
  ComplexityReport r;
  r.name = "mswinsr";
  r.h = h;
  r.w = w;
  r.params_analytic = mswinsr_params(cfg);
  r.multiadds_analytic = mswinsr_multiadds(cfg, h, w);
  auto model = MswinsrT<float>::create(cfg, 0);
  r.params_empirical = model.params().total_params();
  TensorT<float> x = TensorT<float>::zeros({1, h, w, cfg.in_channels});
  r.multiadds_empirical =
      measure_multiadds([&] {
        NoGradGuard ng;
        model.forward(x);
      });
  return r;
}

ComplexityReport analyze_ugswin_generator(const UgswinConfig& cfg,
                                          std::uint64_t h, std::uint64_t w) {
  ComplexityReport r;
  r.name = "ugswinsr.generator";
  r.h = h;
  r.w = w;
  r.params_analytic = ugswin_generator_params(cfg);
  r.multiadds_analytic = ugswin_generator_multiadds(cfg, h, w);
  auto gen = UgswinGeneratorT<float>::create(cfg, 0);
  r.params_empirical = gen.params().total_params();
  TensorT<float> x = TensorT<float>::zeros({1, h, w, cfg.in_channels});
  r.multiadds_empirical =
      measure_multiadds([&] {
        NoGradGuard ng;
        gen.forward(x);
      });
  return r;
}

ComplexityReport analyze_ugswin_discriminator(const UgswinConfig& cfg,
                                              std::uint64_t h, std::uint64_t w) {
  ComplexityReport r;
  r.name = "ugswinsr.discriminator";
  r.h = h * cfg.scale;
  r.w = w * cfg.scale;
  r.params_analytic = ugswin_discriminator_params(cfg);
  r.multiadds_analytic = ugswin_discriminator_multiadds(cfg, r.h, r.w);
  auto disc = UgswinDiscriminatorT<float>::create(cfg, 0);
  r.params_empirical = disc.params().total_params();
  TensorT<float> x = TensorT<float>::zeros({1, r.h, r.w, cfg.in_channels});
  r.multiadds_empirical =
      measure_multiadds([&] {
        NoGradGuard ng;
        disc.forward(x);
      });
  return r;
}

std::string report_text(const ComplexityReport& r) {
  std::ostringstream os;
  os << r.name << " @ " << r.h << "x" << r.w << "\n"
     << "  params     analytic " << r.params_analytic << "  empirical "
     << r.params_empirical << "\n"
     << "  multi-adds analytic " << r.multiadds_analytic << "  empirical "
     << r.multiadds_empirical << "\n";
  return os.str();
}

std::string report_json(const ComplexityReport& r) {
  std::ostringstream os;
  os << "{\"name\":\"" << r.name << "\",\"h\":" << r.h << ",\"w\":" << r.w
     << ",\"params_analytic\":" << r.params_analytic
     << ",\"params_empirical\":" << r.params_empirical
     << ",\"multiadds_analytic\":" << r.multiadds_analytic
     << ",\"multiadds_empirical\":" << r.multiadds_empirical << "}";
  return os.str();
}

}  // namespace srlite
