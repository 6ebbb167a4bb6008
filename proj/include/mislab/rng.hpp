#ifndef MISLAB_RNG_HPP
#define MISLAB_RNG_HPP

#include <array>
#include <cstdint>
#include <limits>

namespace mislab {

/// SplitMix64 (Steele, Lea, Flood 2014). Used to expand seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stateless mix of one word (one SplitMix64 output step).
constexpr std::uint64_t mix64(std::uint64_t x) { return splitmix64(x); }

/// xoshiro256** 1.0 (Blackman, Vigna). Satisfies UniformRandomBitGenerator.
///
/// A stream is identified by (master seed, tag, index); the 256-bit state is
/// filled by SplitMix64 seeded with mix64(master ^ mix64(tag ^ mix64(index))).
/// The output sequence depends only on those three words, never on threads.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0) { seed_from(seed); }

  static Xoshiro256 stream(std::uint64_t master_seed, std::uint64_t tag, std::uint64_t index) {
    Xoshiro256 g;
    g.seed_from(mix64(master_seed ^ mix64(tag ^ mix64(index))));
    return g;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by Lemire's multiply-and-reject.
  std::uint64_t below(std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  void seed_from(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::array<std::uint64_t, 4> s_{};
};

/// Stream tags keep graph, Y, Z and bootstrap streams disjoint for one master seed.
enum class StreamTag : std::uint64_t {
  graph = 0x4752415048ULL,
  y_cost = 0x59434f5354ULL,
  z_cost = 0x5a434f5354ULL,
  bootstrap = 0x424f4f54ULL,
  calibration = 0x43414c4942ULL,
};

}  // namespace mislab

#endif  // MISLAB_RNG_HPP
