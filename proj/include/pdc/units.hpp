#pragma once

#include <numbers>

// Internal unit system: lengths in micrometres, times in femtoseconds,
// angular frequencies in rad/fs, wave numbers in rad/um.
namespace pdc {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 0.299792458;  // um/fs
inline constexpr double kGoldenRatio = std::numbers::phi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Vacuum angular frequency (rad/fs) of a wavelength given in nm.
constexpr double omega_of_nm(double wavelength_nm) {
  return 2.0 * kPi * kSpeedOfLight / (wavelength_nm * 1e-3);
}

constexpr double nm_of_omega(double omega) {
  return 2.0 * kPi * kSpeedOfLight / omega * 1e3;
}

// Vacuum wave number (rad/um).
constexpr double k0_of_nm(double wavelength_nm) {
  return 2.0 * kPi / (wavelength_nm * 1e-3);
}

}  // namespace pdc
