#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace phnsw::detail {

// Uniform draw in (0, 1], built from the top 53 bits of the generator so the
// result does not depend on the standard library's distribution internals.
inline double uniform_unit(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

// Box-Muller standard normal, same portability rationale as uniform_unit.
inline double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform_unit(rng);
  double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace phnsw::detail
