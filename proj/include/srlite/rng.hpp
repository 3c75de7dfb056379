#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace srlite {

// xoshiro256++ generator. One root seed derives independent per-purpose
// streams (parameter init, shuffling, synthetic data) via Rng::stream, so
// reruns are portable across platforms for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  explicit Rng(const std::array<std::uint64_t, 4>& state) : s_(state) {}

  // Derives a stream whose seed depends on both the root seed and the
  // purpose label (FNV-1a hash), so streams never collide by accident.
  static Rng stream(std::uint64_t root_seed, std::string_view purpose,
                    std::uint64_t index = 0);

  std::uint64_t next_u64();

  // Uniform in [0,1).
  double uniform();
  // Standard normal via Box-Muller. Draws two uniforms, returns one; keeps
  // the generator state a plain 4-word record.
  double normal();
  // Normal(0, stddev) resampled until |z| <= lim standard deviations.
  double trunc_normal(double stddev, double lim = 2.0);
  // Uniform in {0, ..., n-1} without modulo bias.
  std::size_t uniform_index(std::size_t n);

  const std::array<std::uint64_t, 4>& state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& st) { s_ = st; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

// Fisher-Yates shuffle driven by the given generator.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.uniform_index(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace srlite
