#pragma once

#include <numbers>

namespace rydmix::constants {

// CODATA 2018 recommended values.
inline constexpr double speed_of_light = 299'792'458.0;          // m s^-1
inline constexpr double planck = 6.626'070'15e-34;               // J s
inline constexpr double hbar = planck / (2.0 * std::numbers::pi);  // J s
inline constexpr double boltzmann = 1.380'649e-23;               // J K^-1
inline constexpr double elementary_charge = 1.602'176'634e-19;   // C
inline constexpr double vacuum_permittivity = 8.854'187'812'8e-12;  // F m^-1
inline constexpr double vacuum_permeability = 1.256'637'062'12e-6;  // N A^-2
inline constexpr double bohr_radius = 5.291'772'109'03e-11;      // m
inline constexpr double ea0 = elementary_charge * bohr_radius;   // C m

inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace rydmix::constants

namespace rydmix::rb87 {

// Natural linewidth of the D2 line, Gamma / 2pi.
inline constexpr double d2_linewidth_hz = 6.07e6;

// Transition dipole moments |d_lm| in units of e a0 for the six-level scheme.
inline constexpr double dipole_p_ea0 = 2.99;    // |1> <-> |2>
inline constexpr double dipole_l_ea0 = 1.22;    // |1> <-> |6>
inline constexpr double dipole_s_ea0 = 0.006;   // |2> <-> |3>
inline constexpr double dipole_c_ea0 = 0.013;   // |5> <-> |6>
inline constexpr double dipole_a_ea0 = 363.6;   // |3> <-> |4>
inline constexpr double dipole_m_ea0 = 667.3;   // |4> <-> |5>

// Carrier frequencies (Hz).
inline constexpr double freq_p_hz = 384.2e12;
inline constexpr double freq_l_hz = 384.2e12;
inline constexpr double freq_blue_hz = 623.5e12;
inline constexpr double freq_a_hz = 36.705e9;
inline constexpr double freq_m_hz = 36.907e9;

inline constexpr double wavelength_probe_m = 780.2e-9;
inline constexpr double wavelength_blue_m = 480.8e-9;

}  // namespace rydmix::rb87
