#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace saddlenet {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Keyed pseudo-random stream.
///
/// A stream is identified by (seed, stream, counter). The engine uses
/// stream = agent index and counter = iteration, so each agent draws from an
/// independent stream every iteration and a run is reproducible from its
/// master seed alone, independent of evaluation order. Inside a stream the
/// generator is SplitMix64.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(mix64(seed)) {}
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
      : state_(mix64(mix64(mix64(seed) ^ (stream + 0x632be59bd9b4e019ULL)) ^
                     (counter + 0x9e3779b97f4a7c15ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return normal_(*this); }

  // +1 or -1 with equal probability.
  double sign() { return ((*this)() >> 63) ? 1.0 : -1.0; }

 private:
  std::uint64_t state_;
  std::normal_distribution<double> normal_;
};

// Streams reserved for non-agent draws.
inline constexpr std::uint64_t kSamplerStream = 0xffffffffffff0001ULL;
inline constexpr std::uint64_t kProbeStream = 0xffffffffffff0002ULL;

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) + index * 0xd1342543de82ef95ULL + 1);
}

inline std::vector<std::uint64_t> derive_seeds(std::uint64_t master,
                                               std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = derive_seed(master, i);
  return seeds;
}

}  // namespace saddlenet
