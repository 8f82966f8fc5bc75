#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace aqmsense {

/// Fixed stream ids used to derive independent child generators. New
/// sampling sites get a new id; existing ids never change meaning.
namespace stream {
inline constexpr std::uint64_t kStructure = 1;
inline constexpr std::uint64_t kLinks = 2;
inline constexpr std::uint64_t kFlows = 3;
inline constexpr std::uint64_t kBottleneck = 4;
inline constexpr std::uint64_t kSimulation = 5;
inline constexpr std::uint64_t kTopologySeeds = 6;
inline constexpr std::uint64_t kHeldOut = 7;
inline constexpr std::uint64_t kInit = 8;
inline constexpr std::uint64_t kShuffle = 9;
inline constexpr std::uint64_t kSearch = 10;
inline constexpr std::uint64_t kSplits = 11;
inline constexpr std::uint64_t kImportance = 12;
inline constexpr std::uint64_t kAuxCount = 13;
}  // namespace stream

/// SplitMix64 finalizer; used to mix seeds and stream ids.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of child stream `id` of `seed`. Pure function of its arguments.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t id) noexcept;

/// Seedable generator built on std::mt19937_64 (whose output sequence is
/// fixed by the C++ standard). Distribution helpers are implemented here
/// rather than through <random> distributions so that draws are identical
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Independent generator for stream `id`, derived from the construction
  /// seed only, so it does not depend on how many draws were taken here.
  Rng child(std::uint64_t id) const { return Rng(derive_seed(seed_, id)); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform real in [lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [lo, hi], unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// log-uniform real in [lo, hi], lo > 0.
  double log_uniform(double lo, double hi);

  bool bernoulli(double p) { return uniform01() < p; }

  /// Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace aqmsense
