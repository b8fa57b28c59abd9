#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qnn4eo {

/// SplitMix64 finalizer. Used to derive independent stream seeds from
/// (seed, index, ...) tuples.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Folds a list of words into one seed; order-sensitive.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> words) noexcept;

/// Thin wrapper over mt19937_64 whose real/integer conversions are written out
/// explicitly, so draws are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, bound); bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace qnn4eo
