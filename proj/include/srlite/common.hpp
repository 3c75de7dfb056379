#pragma once

#include <cstddef>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace srlite {

// Extents of a dense row-major tensor, outermost axis first.
using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mismatched or invalid tensor extents.
struct ShapeError : Error {
  using Error::Error;
};

// Invalid argument values or non-finite numbers where finite ones are required.
struct ValueError : Error {
  using Error::Error;
};

// Rejected configuration; message names the offending key.
struct ConfigError : Error {
  using Error::Error;
};

// File and stream failures.
struct IoError : Error {
  using Error::Error;
};

// Malformed or incompatible checkpoint files.
struct CheckpointError : Error {
  enum class Kind { bad_magic, bad_version, truncated, missing_param, other };
  CheckpointError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
  Kind kind;
};

}  // namespace srlite
