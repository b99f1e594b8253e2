#pragma once

#include <cstdint>
#include <limits>

namespace relaysim {

/// SplitMix64 generator. Each (master seed, pulse, stream) triple names an
/// independent stream, so results do not depend on evaluation order.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  explicit StreamRng(std::uint64_t state) : state_(state) {}
  StreamRng(std::uint64_t master_seed, std::uint64_t pulse, std::uint64_t stream)
      : state_(mix(mix(master_seed ^ 0x6a09e667f3bcc909ULL) ^ mix(pulse + 0x3c6ef372fe94f82bULL) ^
                   (stream * 0x9e3779b97f4a7c15ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(state_ += 0x9e3779b97f4a7c15ULL); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace relaysim
