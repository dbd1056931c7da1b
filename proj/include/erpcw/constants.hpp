#pragma once

#include <numbers>

namespace erpcw {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// Normalized frequency a/lambda -> THz for a lattice constant in nm.
inline constexpr double normalized_to_thz(double f_norm, double a_nm) {
  return f_norm * kSpeedOfLight / (a_nm * 1e-9) * 1e-12;
}

inline constexpr double thz_to_normalized(double nu_thz, double a_nm) {
  return nu_thz * 1e12 * (a_nm * 1e-9) / kSpeedOfLight;
}

inline constexpr double thz_to_nm(double nu_thz) { return kSpeedOfLight / (nu_thz * 1e12) * 1e9; }
inline constexpr double nm_to_thz(double lambda_nm) { return kSpeedOfLight / (lambda_nm * 1e-9) * 1e-12; }

}  // namespace erpcw
