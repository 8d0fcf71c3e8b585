#ifndef DNAGRF_RNG_HPP
#define DNAGRF_RNG_HPP

#include <cstdint>
#include <random>
#include <span>

namespace dnagrf {

/// Reproducible standard-normal source identified by (seed, stream).
///
/// The engine is seeded with a splitmix hash of both words so that
/// neighbouring stream ids give unrelated engine states. std::seed_seq would
/// do the same job but costs ~20 us per stream, which dominates short draws.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream), engine_(mix(mix(seed) ^ stream)) {}

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream() const { return stream_; }

  double normal() { return normal_(engine_); }

  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal_(engine_);
  }

  /// Child stream for sub-task `index`, e.g. one boundary mask of a DNA draw.
  [[nodiscard]] RngStream substream(std::uint64_t index) const {
    return RngStream(seed_, mix(stream_ ^ mix(index + 0x9e3779b97f4a7c15ull)));
  }

  /// splitmix64 finaliser
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace dnagrf

#endif  // DNAGRF_RNG_HPP
