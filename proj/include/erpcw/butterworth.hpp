#pragma once

// Second-order digital Butterworth lowpass (bilinear transform with
// pre-warping) and zero-phase forward-backward application.

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "erpcw/constants.hpp"
#include "erpcw/errors.hpp"

namespace erpcw {

struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;  // a0 normalized to 1

  // |H(e^{i w})| at w = pi * f, f the frequency as a fraction of Nyquist.
  double magnitude(double f) const {
    const double w = kPi * f;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    return std::abs((b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2));
  }
};

// cutoff: -3 dB point as a fraction of the Nyquist frequency, in (0, 1).
inline Biquad butterworth_lowpass2(double cutoff) {
  require(cutoff > 0.0 && cutoff < 1.0, "Butterworth cutoff must lie in (0, 1) of Nyquist");
  const double k = std::tan(kPi * cutoff / 2.0);
  const double k2 = k * k;
  const double norm = 1.0 / (1.0 + std::sqrt(2.0) * k + k2);
  Biquad f;
  f.b0 = k2 * norm;
  f.b1 = 2.0 * f.b0;
  f.b2 = f.b0;
  f.a1 = 2.0 * (k2 - 1.0) * norm;
  f.a2 = (1.0 - std::sqrt(2.0) * k + k2) * norm;
  return f;
}

// Direct form II transposed with initial state (z1, z2).
inline std::vector<double> biquad_filter(const Biquad& f, const std::vector<double>& x, double z1 = 0.0,
                                         double z2 = 0.0) {
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double out = f.b0 * x[n] + z1;
    z1 = f.b1 * x[n] - f.a1 * out + z2;
    z2 = f.b2 * x[n] - f.a2 * out;
    y[n] = out;
  }
  return y;
}

// Steady-state state for a unit step input, so a constant passes unchanged.
inline std::pair<double, double> biquad_step_state(const Biquad& f) {
  // Solve z = A z + B for the DF2T state with unit input and unit output
  // (unit DC gain): z2 = b2 - a2, z1 = 1 - b0.
  return {1.0 - f.b0, f.b2 - f.a2};
}

inline constexpr std::size_t kFiltfiltPad = 12;

// Zero-phase filtering: odd-reflection padding, steady-state initial
// conditions, then forward and reverse passes. Needs more samples than the pad.
inline std::vector<double> filtfilt(const Biquad& f, const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n <= kFiltfiltPad)
    throw InvalidArgument("zero-phase filter needs at least " + std::to_string(kFiltfiltPad + 1) + " samples");
  const std::size_t pad = kFiltfiltPad;
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t k = pad; k >= 1; --k) ext.push_back(2.0 * x.front() - x[k]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t k = 1; k <= pad; ++k) ext.push_back(2.0 * x.back() - x[n - 1 - k]);

  const auto [s1, s2] = biquad_step_state(f);
  std::vector<double> fwd = biquad_filter(f, ext, s1 * ext.front(), s2 * ext.front());
  std::vector<double> rev(fwd.rbegin(), fwd.rend());
  std::vector<double> back = biquad_filter(f, rev, s1 * rev.front(), s2 * rev.front());
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = back[back.size() - 1 - pad - k];
  return out;
}

}  // namespace erpcw
