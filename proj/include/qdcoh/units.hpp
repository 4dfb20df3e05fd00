// units.hpp: Physical constants and energy <-> angular-frequency conversions
//
// Internal unit system: time in ps, rates and angular frequencies in ps^-1,
// energies in meV, temperature in K.

#pragma once

#include <numbers>

namespace qdcoh::units {

inline constexpr double hbar = 0.6582120;   // meV ps
inline constexpr double kB = 0.0861733;     // meV / K
inline constexpr double planck = 2.0 * std::numbers::pi * hbar;  // meV ps

constexpr double energy_to_rate(double meV) noexcept { return meV / hbar; }
constexpr double rate_to_energy(double per_ps) noexcept { return per_ps * hbar; }

constexpr double ueV_to_rate(double ueV) noexcept { return energy_to_rate(ueV * 1e-3); }
constexpr double rate_to_ueV(double per_ps) noexcept { return rate_to_energy(per_ps) * 1e3; }

// Dephasing rates are often quoted as h*gamma rather than hbar*gamma.
constexpr double rate_to_h_ueV(double per_ps) noexcept { return per_ps * planck * 1e3; }
constexpr double h_ueV_to_rate(double ueV) noexcept { return ueV * 1e-3 / planck; }

// Thermal angular frequency k_B T / hbar in ps^-1.
constexpr double thermal_rate(double kelvin) noexcept { return kB * kelvin / hbar; }

} // namespace qdcoh::units
