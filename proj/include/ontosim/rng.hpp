#pragma once

#include <cmath>
#include <cstdint>

namespace ontosim {

/// Counter-based generator (Philox4x32-10).  Value semantics: copying the
/// state replays the stream bit-for-bit, and split() derives a statistically
/// independent child stream from a 64-bit index, so parallel work can hand
/// each unit its own generator without coordination.
class Rng {
 public:
  Rng() : Rng(0, 0) {}
  explicit Rng(uint64_t seed, uint64_t stream = 0)
      : seed_(seed), stream_(stream), counter_(0), block_pos_(4) {}

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }

  /// Child generator for work unit `child`.  Children of distinct indices
  /// under the same parent never collide.
  Rng split(uint64_t child) const {
    uint64_t mixed = avalanche(stream_ * 0x9E3779B97F4A7C15ull +
                               0x6A09E667F3BCC909ull + child);
    return Rng(seed_, mixed);
  }

  uint32_t next_u32() {
    if (block_pos_ >= 4) refill();
    return block_[block_pos_++];
  }

  uint64_t next_u64() {
    uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in {0, ..., n-1} (n >= 1), multiply-shift bounded draw.
  uint64_t uniform_index(uint64_t n) {
    // 128-bit multiply maps the 64-bit draw onto [0, n) almost uniformly;
    // the bias is < n / 2^64 and irrelevant at the sizes used here.
    unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<uint64_t>(wide >> 64);
  }

  /// Exponential waiting time with the given rate; strictly positive.
  double exponential(double rate) {
    double t = 0.0;
    do {
      t = -std::log1p(-uniform()) / rate;
    } while (!(t > 0.0));
    return t;
  }

  /// Standard normal via Box-Muller (no cached second value, so the draw
  /// count per call is fixed).
  double normal() {
    double u1 = 0.0;
    do {
      u1 = 1.0 - uniform();  // (0, 1]
    } while (u1 <= 0.0);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  static uint64_t avalanche(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  void refill() {
    uint32_t c0 = static_cast<uint32_t>(counter_);
    uint32_t c1 = static_cast<uint32_t>(counter_ >> 32);
    uint32_t c2 = static_cast<uint32_t>(stream_);
    uint32_t c3 = static_cast<uint32_t>(stream_ >> 32);
    uint32_t k0 = static_cast<uint32_t>(seed_);
    uint32_t k1 = static_cast<uint32_t>(seed_ >> 32);
    for (int round = 0; round < 10; ++round) {
      uint64_t m0 = 0xD2511F53ull * c0;
      uint64_t m1 = 0xCD9E8D57ull * c2;
      uint32_t r0 = static_cast<uint32_t>(m1 >> 32) ^ c1 ^ k0;
      uint32_t r1 = static_cast<uint32_t>(m1);
      uint32_t r2 = static_cast<uint32_t>(m0 >> 32) ^ c3 ^ k1;
      uint32_t r3 = static_cast<uint32_t>(m0);
      c0 = r0;
      c1 = r1;
      c2 = r2;
      c3 = r3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    block_[0] = c0;
    block_[1] = c1;
    block_[2] = c2;
    block_[3] = c3;
    ++counter_;
    block_pos_ = 0;
  }

  uint64_t seed_;
  uint64_t stream_;
  uint64_t counter_;
  uint32_t block_[4] = {0, 0, 0, 0};
  int block_pos_;
};

}  // namespace ontosim
