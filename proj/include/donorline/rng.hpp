#pragma once

#include <cstdint>
#include <random>

namespace donorline {

/// Seedable stream generator. Stream `index` of `seed` is a fixed function of
/// the pair, so work split across threads reproduces the serial result.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x9E3779B9u};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1) with 53 random bits; bit-identical across standard libraries.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace donorline
