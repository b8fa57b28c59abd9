#include "qnn4eo/rng.hpp"

#include <cmath>
#include <numbers>

namespace qnn4eo {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t w : words) h = mix64(h ^ mix64(w + 0x632be59bd9b4e019ULL));
  return h;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // Rejection sampling on the top of the range (Lemire-free, plain modulo).
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace qnn4eo
