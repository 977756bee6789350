#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

#include "nvtherm/errors.hpp"
#include "nvtherm/units.hpp"

namespace nvtherm {

namespace detail {

inline constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
inline constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
inline constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73BULL;

inline void mul_hilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                     std::uint64_t& lo) {
  const unsigned __int128 product =
      static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
  hi = static_cast<std::uint64_t>(product >> 64);
  lo = static_cast<std::uint64_t>(product);
}

}  // namespace detail

// One block of the Philox 4x64 keyed permutation, 10 rounds.
inline std::array<std::uint64_t, 4> philox4x64_block(
    std::array<std::uint64_t, 4> counter, std::array<std::uint64_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    detail::mul_hilo(detail::kPhiloxM0, counter[0], hi0, lo0);
    detail::mul_hilo(detail::kPhiloxM1, counter[2], hi1, lo1);
    counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
    key[0] += detail::kPhiloxW0;
    key[1] += detail::kPhiloxW1;
  }
  return counter;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based generator. A stream is fully identified by its 128-bit key;
// the output is a pure function of (key, counter), so a substream derived
// for one Monte Carlo cell produces the same values no matter which thread
// evaluates it or in what order cells are scheduled.
//
// Substream derivation: the scenario seed is avalanched with splitmix64 and
// each path component (domain tag, probe id hash, power index, trial index)
// is folded into the key in order. Distinct paths give independent streams.
class Philox {
 public:
  using result_type = std::uint64_t;

  Philox() : Philox(0, 0) {}
  explicit Philox(std::uint64_t key_lo, std::uint64_t key_hi = 0)
      : key_{key_lo, key_hi} {}

  static Philox substream(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path) {
    std::uint64_t lo = splitmix64(seed);
    std::uint64_t hi = splitmix64(lo ^ 0x6A09E667F3BCC909ULL);
    for (std::uint64_t component : path) {
      lo = splitmix64(lo ^ splitmix64(component));
      hi = splitmix64(hi ^ lo);
    }
    return Philox(lo, hi);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  result_type operator()() {
    if (cursor_ == 4) {
      block_ = philox4x64_block(counter_, key_);
      for (int i = 0; i < 4 && ++counter_[i] == 0; ++i) {
      }
      cursor_ = 0;
    }
    return block_[cursor_++];
  }

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_{};
  std::array<std::uint64_t, 4> block_{};
  int cursor_ = 4;
};

// Uniform double in [0, 1), 53 random bits.
inline double uniform01(Philox& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; consumes exactly two uniforms.
inline double normal_sample(Philox& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1], keeps log finite
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Poisson draw, returned as a double-valued non-negative integer. Knuth's
// product method below the crossover, rounded Gaussian above it (relative
// moment error O(1/mean) there, negligible for photon-counting use).
inline double poisson_sample(double mean, Philox& rng) {
  if (!std::isfinite(mean) || mean < 0.0) {
    throw ValidationError("poisson_sample: mean must be finite and >= 0");
  }
  if (mean == 0.0) {
    return 0.0;
  }
  if (mean < 30.0) {
    const double threshold = std::exp(-mean);
    double product = 1.0;
    double k = -1.0;
    do {
      product *= uniform01(rng);
      k += 1.0;
    } while (product > threshold);
    return k;
  }
  const double draw = std::round(mean + std::sqrt(mean) * normal_sample(rng));
  return draw < 0.0 ? 0.0 : draw;
}

constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

}  // namespace nvtherm
