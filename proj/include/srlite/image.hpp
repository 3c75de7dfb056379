#pragma once

#include <string>
#include <vector>

#include "srlite/tensor.hpp"

namespace srlite {

// Binary PPM (P6, maxval 255) image I/O. Images are (H,W,3) float tensors
// with values in [0,1]; byte b maps to b/255.

// Throws IoError on missing files, bad headers, or truncated pixel data.
Tensor read_ppm(const std::string& path);

// Writes the canonical header "P6\n<w> <h>\n255\n". Values are clamped to
// [0,1] and rounded to the nearest byte. Throws ShapeError unless the image
// is (H,W,3).
void write_ppm(const std::string& path, const Tensor& img);

// In-memory forms used by the file functions and by tests.
Tensor decode_ppm(const std::vector<unsigned char>& bytes,
                  const std::string& origin = "<memory>");
std::vector<unsigned char> encode_ppm(const Tensor& img);

}  // namespace srlite
