// Counter-based random numbers (Philox4x32-10). Every draw is a pure function
// of (seed, chain, counter), so chains can be split and replayed freely.
#ifndef SURFSHIFT_RNG_HPP
#define SURFSHIFT_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace surfshift {

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block apply(Block ctr, Key key) {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      ctr = round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static Block round(const Block& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// splitmix64 finalizer, used only to spread (seed, chain) over the key space.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline Philox4x32::Key stream_key(std::uint64_t seed, std::uint64_t chain) {
  const std::uint64_t k = mix64(seed ^ mix64(chain));
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

/// 53-bit uniform in [0, 1).
inline double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

/// Random access: 64 bits determined by (key, a, b, c).
inline std::uint64_t counter_bits(const Philox4x32::Key& key, std::uint64_t a, std::uint32_t b, std::uint32_t c) {
  const auto out = Philox4x32::apply({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b, c}, key);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

inline double counter_uniform(const Philox4x32::Key& key, std::uint64_t a, std::uint32_t b, std::uint32_t c) {
  return to_unit(counter_bits(key, a, b, c));
}

/// Both 64-bit halves of one block as uniforms; the first equals counter_uniform.
inline std::array<double, 2> counter_uniform_pair(const Philox4x32::Key& key, std::uint64_t a, std::uint32_t b,
                                                  std::uint32_t c) {
  const auto out = Philox4x32::apply({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b, c}, key);
  return {to_unit((static_cast<std::uint64_t>(out[1]) << 32) | out[0]),
          to_unit((static_cast<std::uint64_t>(out[3]) << 32) | out[2])};
}

/// Sequential stream over one (seed, chain, lane). Each Philox block yields two
/// 64-bit outputs. Satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t chain, std::uint32_t lane = 0)
      : key_(stream_key(seed, chain)), lane_(lane) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto out = Philox4x32::apply(
        {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32), lane_, 0x5eedu}, key_);
    ++counter_;
    spare_ = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    have_spare_ = true;
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  }

  double uniform() { return to_unit((*this)()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Box-Muller; both variates of a pair are used.
  double normal() {
    if (have_normal_) {
      have_normal_ = false;
      return normal_spare_;
    }
    const double u1 = 1.0 - uniform();  // in (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    normal_spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    have_normal_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t blocks_used() const { return counter_; }

 private:
  Philox4x32::Key key_;
  std::uint32_t lane_;
  std::uint64_t counter_ = 0;
  std::uint64_t spare_ = 0;
  bool have_spare_ = false;
  double normal_spare_ = 0.0;
  bool have_normal_ = false;
};

}  // namespace surfshift

#endif
