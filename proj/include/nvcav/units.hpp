#pragma once

#include <numbers>

// Unit conventions used across the library:
//   - rates in the rate-equation models are in 1/us (numerically "MHz"),
//   - cavity-QED rates (g, kappa, gamma0) are angular, in rad/us,
//   - time traces (decay, Bloch, photon tags) are in ns,
//   - cavity displacement is in pm.
namespace nvcav::units
{

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Ordinary frequency in MHz -> angular rad/us.
constexpr double angular_mhz(double f_mhz) { return two_pi * f_mhz; }
constexpr double angular_ghz(double f_ghz) { return two_pi * 1e3 * f_ghz; }
// Angular rad/us -> ordinary MHz.
constexpr double ordinary_mhz(double w) { return w / two_pi; }

// 1/us -> 1/ns.
constexpr double per_ns(double per_us) { return per_us * 1e-3; }

inline constexpr double ps_per_ns = 1e3;
inline constexpr double ns_per_us = 1e3;

} // namespace nvcav::units
