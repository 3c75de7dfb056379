#pragma once

#include <cstdint>

namespace srlite::profile {

// Optional multiply-accumulate counter. When a counter is installed, every
// forward matmul and convolution adds its scalar-product count; element-wise
// work, softmax, normalization, and bias additions are never counted. Ops
// record at graph-construction time on the calling thread, so a plain
// pointer suffices.
void set_multiadd_counter(std::uint64_t* counter);
std::uint64_t* multiadd_counter();

inline void count_multiadds(std::uint64_t n) {
  if (auto* c = multiadd_counter()) *c += n;
}

}  // namespace srlite::profile
