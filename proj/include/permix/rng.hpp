#ifndef PERMIX_RNG_HPP
#define PERMIX_RNG_HPP

#include <cstdint>
#include <random>

namespace permix {

namespace detail {

// splitmix64 step; used both for seeding and for stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Seeded random stream with deterministic substream derivation, so that
/// parallel tasks indexed by position draw identically regardless of the
/// worker count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }

  /// Independent stream for substream `index` of this stream.
  Rng split(std::uint64_t index) const {
    std::uint64_t s = seed_ ^ (0xd1342543de82ef95ULL * (index + 1));
    std::uint64_t mixed = s;
    return Rng(detail::splitmix64(mixed));
  }

  /// Uniform in [0, 1).
  double uniform() {
    return std::generate_canonical<double, 53>(engine_);
  }

  /// Uniform integer in [0, bound).
  std::uint64_t uniform_int(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  static std::mt19937_64 mix(std::uint64_t seed) {
    std::uint64_t s = seed;
    return std::mt19937_64(detail::splitmix64(s));
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace permix

#endif  // PERMIX_RNG_HPP
