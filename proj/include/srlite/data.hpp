#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srlite/tensor.hpp"

namespace srlite {

// A training pair: hr is exactly scale x the extents of lr, both (H,W,C)
// in [0,1].
struct PairedSample {
  Tensor lr, hr;
};

// Largest centered square of the image (crop offsets round down).
Tensor center_crop_square(const Tensor& img);

// Center-crop to a square, bicubic-resample to hr_size, then downscale by s.
// Outputs are clamped to [0,1] (cubic resampling can overshoot slightly).
// Throws ValueError for images smaller than 2x2 or when s does not divide
// hr_size.
PairedSample degrade_pair(const Tensor& img, std::size_t hr_size,
                          std::size_t s);

// 10*log10(max_val^2 / MSE) over every element, in dB; identical inputs
// yield +infinity.
double psnr(const Tensor& a, const Tensor& b, double max_val = 1.0);

// Mean local structural similarity over an 11x11 Gaussian window
// (sigma 1.5, K1 0.01, K2 0.03, dynamic range 1). Inputs are (H,W) or
// (H,W,C); multi-channel images are averaged to grayscale first. Throws
// ShapeError for images smaller than the window.
double ssim(const Tensor& a, const Tensor& b);

// Deterministic mixture of smooth gradients, soft ellipses, and dark
// strokes, rendered at hr_size and degraded into pairs. Sample i depends
// only on (seed, i).
std::vector<PairedSample> synth_dataset(std::uint64_t seed, std::size_t n,
                                        std::size_t hr_size, std::size_t s);

// One relative path per line; blank lines are skipped.
std::vector<std::string> read_manifest(const std::string& path);

struct Batch {
  Tensor lr, hr;  // (B,h,w,C) and (B,H,W,C)
};

// Copies the selected samples into contiguous batch tensors; every selected
// sample must share the first sample's extents.
Batch stack_batch(const std::vector<PairedSample>& data,
                  const std::vector<std::size_t>& idx);

}  // namespace srlite
