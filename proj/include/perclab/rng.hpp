#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al. SC 2011).
// Every variate is a pure function of (seed, stream, sample, draw), so
// replicas can be evaluated in any order, on any thread, lazily per site,
// and still reproduce byte-for-byte.

#include <array>
#include <cstdint>

namespace perclab {

namespace detail {

inline constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<uint32_t, 4>& c, const std::array<uint32_t, 2>& k) {
  uint64_t p0 = static_cast<uint64_t>(kPhiloxM0) * c[0];
  uint64_t p1 = static_cast<uint64_t>(kPhiloxM1) * c[2];
  uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
  uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline std::array<uint32_t, 4> philox4x32_10(std::array<uint32_t, 4> ctr,
                                             std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    philox_round(ctr, key);
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

// One logical stream of a keyed counter generator. Distinct stream_index
// values give statistically independent sequences; identical
// (seed, stream_index) reproduce identical draws.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(uint64_t seed, uint64_t stream_index)
      : seed_(seed), stream_(stream_index) {
    uint64_t k = detail::splitmix64(seed ^ detail::splitmix64(stream_index));
    key_ = {static_cast<uint32_t>(k), static_cast<uint32_t>(k >> 32)};
  }

  uint64_t seed() const { return seed_; }
  uint64_t stream_index() const { return stream_; }

  uint64_t bits64(uint64_t sample, uint64_t draw) const {
    std::array<uint32_t, 4> ctr = {
        static_cast<uint32_t>(sample), static_cast<uint32_t>(sample >> 32),
        static_cast<uint32_t>(draw), static_cast<uint32_t>(draw >> 32)};
    auto out = detail::philox4x32_10(ctr, key_);
    return (static_cast<uint64_t>(out[0]) << 32) | out[1];
  }

  // Uniform on [0,1) with 53 random bits.
  double uniform(uint64_t sample, uint64_t draw) const {
    return static_cast<double>(bits64(sample, draw) >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p, uint64_t sample, uint64_t draw) const {
    return uniform(sample, draw) < p;
  }

  // Substream with the given offset added to the stream index.
  RngStream substream(uint64_t offset) const { return RngStream(seed_, stream_ + offset); }

 private:
  uint64_t seed_;
  uint64_t stream_;
  std::array<uint32_t, 2> key_;
};

// Draw-space tags: a site-occupancy draw for sub-configuration c (0..3) of a
// sample uses draw = site | (c << 62). Site indices stay far below 2^62.
inline constexpr uint64_t draw_tag(uint64_t site, int subconfig) {
  return site | (static_cast<uint64_t>(subconfig) << 62);
}

}  // namespace perclab
