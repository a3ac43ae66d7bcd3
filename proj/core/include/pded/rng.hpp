#pragma once

#include <cstdint>

namespace pded {

/// Counter-based random stream: draw n is a pure function of (seed, n), so
/// the whole state is two integers and can be checkpointed exactly.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept { return at(seed_, counter_++); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n) from exactly one draw (multiply-shift).
  std::uint64_t below(std::uint64_t n) noexcept {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

  /// SplitMix64 finalizer applied to the (seed, counter) pair.
  static std::uint64_t at(std::uint64_t seed, std::uint64_t counter) noexcept {
    std::uint64_t z = seed * 0xD1B54A32D192ED03ull + (counter + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Derive an independent stream key from a parent seed and a label.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t label) noexcept {
    return at(seed ^ 0x6A09E667F3BCC909ull, label);
  }

private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace pded
