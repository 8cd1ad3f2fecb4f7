#pragma once

#include <numbers>

namespace trapscape {

// CODATA 2018 exact / recommended values, SI.
namespace constants {
inline constexpr double elementary_charge = 1.602176634e-19;   // C
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double boltzmann = 1.380649e-23;              // J/K
inline constexpr double pi = std::numbers::pi;
inline constexpr double coulomb_constant = 1.0 / (4.0 * pi * vacuum_permittivity);
}  // namespace constants

// Interfaces report micrometres, volts, MHz/kHz and meV; everything inside is SI.
namespace units {
inline constexpr double um = 1e-6;
inline constexpr double nm = 1e-9;
inline constexpr double mhz = 1e6;
inline constexpr double khz = 1e3;
inline constexpr double mev = 1e-3 * constants::elementary_charge;
inline constexpr double ev = constants::elementary_charge;

inline constexpr double to_um(double metres) { return metres / um; }
inline constexpr double to_mev(double joules) { return joules / mev; }
inline constexpr double angular(double hertz) { return 2.0 * constants::pi * hertz; }
inline constexpr double hertz(double angular_frequency) { return angular_frequency / (2.0 * constants::pi); }
inline constexpr double to_kelvin(double joules) { return joules / constants::boltzmann; }
}  // namespace units

}  // namespace trapscape
