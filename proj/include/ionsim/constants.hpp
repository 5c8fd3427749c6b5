#pragma once

namespace ionsim::consts {

// CODATA 2018 SI values.
inline constexpr double hbar    = 1.054571817e-34;   // J s
inline constexpr double mu_b    = 9.2740100783e-24;  // J/T
inline constexpr double qe      = 1.602176634e-19;   // C
inline constexpr double eps0    = 8.8541878128e-12;  // F/m
inline constexpr double amu     = 1.66053906660e-27; // kg
inline constexpr double pi      = 3.14159265358979323846;
inline constexpr double two_pi  = 2.0 * pi;

// Coulomb coupling e^2/(4 pi eps0), J m. All internal frequencies are angular
// (rad/s); user-facing frequencies are ordinary and in MHz unless a field name
// says otherwise.
inline constexpr double k_coul = qe * qe / (4.0 * pi * eps0);

inline constexpr double mhz_to_rad(double f_mhz) { return two_pi * f_mhz * 1e6; }
inline constexpr double rad_to_mhz(double w) { return w / two_pi * 1e-6; }
inline constexpr double rad_to_hz(double w) { return w / two_pi; }
inline constexpr double hz_to_rad(double f) { return two_pi * f; }

} // namespace ionsim::consts
