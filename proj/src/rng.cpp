#include "specs/rng.hpp"

#include <cmath>
#include <numbers>

namespace specs {

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key, std::uint64_t ordinal) {
  Rng mix(seed ^ fnv1a(key));
  std::uint64_t s = mix.next();
  Rng mix2(s ^ (ordinal * 0xD1B54A32D192ED03ULL));
  return mix2.next();
}

}  // namespace specs
