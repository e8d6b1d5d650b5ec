#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace refnet {

// Counter-based splittable RNG. A stream is (key, counter); draws mix the
// pair through the SplitMix64 finalizer, so any derived stream produces the
// same numbers no matter which thread consumes it or in what order streams
// are created. That is the whole point: per-entity streams keep every
// randomized stage schedule-independent.
class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ kKeyTweak)) {}

  // Child stream named by a tag and up to two integer coordinates.
  // Children never overlap the parent stream.
  Rng derive(std::string_view tag, std::uint64_t a = 0, std::uint64_t b = 0) const {
    std::uint64_t h = key_ ^ kDeriveTweak;
    for (char c : tag) h = mix(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    h = mix(h ^ mix(a + 0x9E3779B97F4A7C15ULL));
    h = mix(h ^ mix(b + 0xC2B2AE3D27D4EB4FULL));
    Rng child;
    child.key_ = h;
    return child;
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  // [0, 1), 53-bit resolution
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    // Lemire-style rejection keeps the distribution exactly uniform.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = -n % n;
      while (lo < t) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_below(n)); }

  bool bernoulli(double p) { return next_double() < p; }

  double normal() {
    // Box-Muller; the spare is discarded to keep draws count-deterministic.
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t key() const { return key_; }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kKeyTweak = 0xA24BAED4963EE407ULL;
  static constexpr std::uint64_t kDeriveTweak = 0x9FB21C651E98DF25ULL;

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace refnet
