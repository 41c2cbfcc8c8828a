#pragma once

#include <cstdint>

namespace glassbuf {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used for seed derivation and
// counter hashing; a pure function of its input on every platform.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(seed ^ splitmix64(value));
}

template <typename... Ts>
constexpr std::uint64_t hash_values(std::uint64_t seed, Ts... values) {
  ((seed = hash_combine(seed, static_cast<std::uint64_t>(values))), ...);
  return seed;
}

// PCG32 (O'Neill 2014, XSH-RR output, 64-bit LCG state).
class Pcg32 {
 public:
  constexpr explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0xda3e39cb94b95bdbull)
      : inc_((stream << 1u) | 1u) {
    next_u32();
    state_ += seed;
    next_u32();
  }

  constexpr std::uint32_t next_u32() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ull + inc_;
    auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((~rot + 1u) & 31u));
  }

  // Uniform in [0, 1) with 24 bits of resolution; exact and portable.
  constexpr float next_float() {
    return static_cast<float>(next_u32() >> 8) * (1.0f / 16777216.0f);
  }

  constexpr float uniform(float lo, float hi) {
    float v = lo + (hi - lo) * next_float();
    return v < lo ? lo : (v > hi ? hi : v);
  }

  // Uniform integer in [0, n) by rejection.
  constexpr std::uint32_t next_below(std::uint32_t n) {
    std::uint32_t threshold = (~n + 1u) % n;
    for (;;) {
      std::uint32_t r = next_u32();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_;
};

}  // namespace glassbuf
