#include "srlite/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace srlite {

namespace {

// PPM headers separate tokens with whitespace; '#' starts a comment that
// runs to the end of the line.
std::size_t skip_space(const std::vector<unsigned char>& b, std::size_t i) {
  while (i < b.size()) {
    if (b[i] == '#') {
      while (i < b.size() && b[i] != '\n') ++i;
    } else if (std::isspace(b[i])) {
      ++i;
    } else {
      break;
    }
  }
  return i;
}

std::size_t read_uint(const std::vector<unsigned char>& b, std::size_t i,
                      std::size_t& out, const std::string& origin) {
  i = skip_space(b, i);
  if (i >= b.size() || !std::isdigit(b[i])) {
    throw IoError(origin + ": malformed header");
  }
  out = 0;
  while (i < b.size() && std::isdigit(b[i])) {
    out = out * 10 + (b[i] - '0');
    ++i;
  }
  return i;
}

}  // namespace

Tensor decode_ppm(const std::vector<unsigned char>& bytes,
                  const std::string& origin) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw IoError(origin + ": not a binary PPM (P6) file");
  }
  std::size_t w = 0, h = 0, maxval = 0;
  std::size_t i = 2;
  i = read_uint(bytes, i, w, origin);
  i = read_uint(bytes, i, h, origin);
  i = read_uint(bytes, i, maxval, origin);
  if (maxval != 255) {
    throw IoError(origin + ": only maxval 255 is supported, got " +
                  std::to_string(maxval));
  }
  if (i >= bytes.size() || !std::isspace(bytes[i])) {
    throw IoError(origin + ": malformed header");
  }
  ++i;  // single whitespace byte before the raster
  const std::size_t need = h * w * 3;
  if (bytes.size() - i < need) {
    throw IoError(origin + ": truncated pixel data, expected " +
                  std::to_string(need) + " bytes, got " +
                  std::to_string(bytes.size() - i));
  }
  std::vector<float> v(need);
  for (std::size_t j = 0; j < need; ++j) {
    v[j] = static_cast<float>(bytes[i + j]) / 255.0f;
  }
  return Tensor::from_vector({h, w, 3}, std::move(v));
}

std::vector<unsigned char> encode_ppm(const Tensor& img) {
  if (img.ndim() != 3 || img.extent(2) != 3) {
    throw ShapeError("encode_ppm expects (H,W,3), got " + shape_str(img.shape()));
  }
  const std::size_t h = img.extent(0), w = img.extent(1);
  char header[64];
  const int n = std::snprintf(header, sizeof(header), "P6\n%zu %zu\n255\n", w, h);
  std::vector<unsigned char> out(header, header + n);
  out.reserve(out.size() + h * w * 3);
  for (float f : img.data()) {
    const float c = f < 0.0f ? 0.0f : (f > 1.0f ? 1.0f : f);
    out.push_back(static_cast<unsigned char>(std::lround(c * 255.0f)));
  }
  return out;
}

Tensor read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_ppm(bytes, path);
}

void write_ppm(const std::string& path, const Tensor& img) {
  const std::vector<unsigned char> bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace srlite
