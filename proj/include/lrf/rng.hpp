#pragma once

#include <cstdint>

namespace lrf {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Addressable substream: (seed, stream) fully determines the output sequence.
// Streams with distinct indices under one seed are reproducible and mutually
// uncorrelated, so work can be partitioned by stream index instead of by
// worker, making results independent of scheduling.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

// xoshiro256++ seeded through a splitmix64 scramble of (seed, stream).
class Rng {
 public:
  Rng() { reseed(RngStream{}); }
  explicit Rng(RngStream id) { reseed(id); }

  void reseed(RngStream id) {
    std::uint64_t st = id.seed ^ (0x9E3779B97F4A7C15ULL * (id.stream + 1));
    s_[0] = splitmix64(st);
    s_[1] = splitmix64(st);
    s_[2] = splitmix64(st);
    s_[3] = splitmix64(st);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9E3779B97F4A7C15ULL;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0,1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal draw (ziggurat).
  double next_normal();

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

}  // namespace lrf
