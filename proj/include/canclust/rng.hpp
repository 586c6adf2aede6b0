#pragma once

#include <array>
#include <cstdint>

namespace canclust {

/// xoshiro256** seeded through splitmix64, with Box-Muller normals.
///
/// Every draw is fully specified (see docs/prng.md) so fixtures can be
/// reproduced bit-for-bit on any platform or in another language.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal. Draws come in Box-Muller pairs; the second of a pair is cached.
  double normal();

private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent stream seed from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace canclust
