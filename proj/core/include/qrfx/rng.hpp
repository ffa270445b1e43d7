#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace qrfx {

// xoshiro256** seeded through splitmix64. Bit-stable across platforms:
// every consumer in the library draws through this generator, never
// through <random> distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();

  // Standard normal via Box-Muller (polar form rejected: rejection counts
  // would make draw counts data-dependent).
  double normal();

  // Unbiased integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Named-purpose seed derivation: hash(master, purpose, a, b). Every
// sub-experiment gets its own stream so runs are independently
// reproducible.
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                          std::uint64_t a = 0, std::uint64_t b = 0);

}  // namespace qrfx
