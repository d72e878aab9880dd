#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace mincomm {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Stable 64-bit tag for a stage name (FNV-1a).
constexpr std::uint64_t tag_of(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for stream `index` of stage `tag` under `master`. Streams with
/// different (index, tag) are decorrelated; adding a stage never shifts
/// another stage's seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t tag);

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::string_view stage) {
  return derive_seed(master, index, tag_of(stage));
}

// xoshiro256** seeded through SplitMix64. All variate transforms below are
// written out explicitly (no <random> distributions) so streams are
// identical across standard libraries; transcendental calls go through the
// platform libm in round-to-nearest mode.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next(); }

  std::uint64_t next();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos();
  /// Box-Muller; both values of each pair are used.
  double normal();
  double exponential();
  /// Standard Gumbel (location 0, scale 1).
  double gumbel();
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mincomm
