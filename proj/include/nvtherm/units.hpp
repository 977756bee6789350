#pragma once

#include <numbers>

// Unit conventions used throughout the library:
//   * every frequency is an angular frequency in rad/s,
//   * user-facing files (sequence programs, scenario configs, CSV output)
//     use plain Hz and are converted at the boundary,
//   * times in seconds, temperatures in kelvin, lengths in meters, powers
//     in watts.

namespace nvtherm {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

constexpr double rad_from_hz(double hz) { return two_pi * hz; }
constexpr double hz_from_rad(double rad) { return rad / two_pi; }

// Electron gyromagnetic ratio of the NV ground state, rad/s per tesla.
// Only used to convert user-supplied magnetic fields into frequency units;
// all internal math stays in rad/s.
inline constexpr double nv_gyromagnetic = two_pi * 28.024e9;

}  // namespace nvtherm
