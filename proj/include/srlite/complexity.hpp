#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "srlite/mswinsr.hpp"
#include "srlite/ugswinsr.hpp"

namespace srlite {

// Closed-form multiply-accumulate costs of standard attention building
// blocks on an h x w map with C channels and window M:
//   wmsa:        one window attention layer, 4hwC^2 + 2M^2hwC
//   rstb:        a residual group of six attention blocks plus a 3x3 conv,
//                81hwC^2 + 12(M^2+1)hwC
//   swin_stage:  attention blocks plus patch merging at stage granularity,
//                37/8 hwC^2 + 3/4 M^2hwC + 13/16 hwC, rounded half up
enum class CostFormula { wmsa, rstb, swin_stage };

// Exact integer evaluation (wide intermediate arithmetic; no overflow for
// h,w <= 4096 and C <= 1024).
std::uint64_t eval_formula(CostFormula kind, std::uint64_t h, std::uint64_t w,
                           std::uint64_t C, std::uint64_t M);

// Multiply-accumulate convention used throughout: one unit per scalar
// multiplication inside matrix products and convolutions. Element-wise
// scaling, softmax, normalization, bias additions, and resampling are free.

// Layer-by-layer closed forms derived from the configurations alone.
std::uint64_t mswinsr_params(const MswinConfig& cfg);
std::uint64_t mswinsr_multiadds(const MswinConfig& cfg, std::uint64_t h,
                                std::uint64_t w);
std::uint64_t ugswin_generator_params(const UgswinConfig& cfg);
std::uint64_t ugswin_generator_multiadds(const UgswinConfig& cfg,
                                         std::uint64_t h, std::uint64_t w);
std::uint64_t ugswin_discriminator_params(const UgswinConfig& cfg);
std::uint64_t ugswin_discriminator_multiadds(const UgswinConfig& cfg,
                                             std::uint64_t h, std::uint64_t w);

// Runs the callback with the op-level multiply-accumulate counter installed
// and returns everything it recorded.
std::uint64_t measure_multiadds(const std::function<void()>& run);

struct ComplexityReport {
  std::string name;
  std::uint64_t h = 0, w = 0;  // input size of the multiply-add columns
  std::uint64_t params_analytic = 0;
  std::uint64_t params_empirical = 0;
  std::uint64_t multiadds_analytic = 0;
  std::uint64_t multiadds_empirical = 0;
};

// Builds the model, counts its parameter store, and instruments one forward
// pass on a zero batch of the given size.
ComplexityReport analyze_mswinsr(const MswinConfig& cfg, std::uint64_t h,
                                 std::uint64_t w);
ComplexityReport analyze_ugswin_generator(const UgswinConfig& cfg,
                                          std::uint64_t h, std::uint64_t w);
// Discriminator columns are reported at the matching high-resolution size
// (h*scale, w*scale).
ComplexityReport analyze_ugswin_discriminator(const UgswinConfig& cfg,
                                              std::uint64_t h, std::uint64_t w);

std::string report_text(const ComplexityReport& r);
std::string report_json(const ComplexityReport& r);

}  // namespace srlite
