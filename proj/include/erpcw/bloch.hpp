#pragma once

// Two-level optical Bloch equations in the rotating frame, integrated with an
// adaptive Dormand-Prince 5(4) pair. Time in us, frequencies in rad/us.
//
//   u' = -delta v - g2 u
//   v' =  delta u - Omega w - g2 v
//   w' =  Omega v - g1 (w + 1)
//
// Excited-state population is (1 + w) / 2; the ground state is w = -1.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>

#include "erpcw/errors.hpp"

namespace erpcw {

using BlochState = std::array<double, 3>;  // (u, v, w)

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_initial = 1e-3;
  double h_min = 1e-12;
  int max_rejections = 60;  // consecutive rejected steps before giving up
  long max_steps = 5'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  double max_norm = 0.0;  // largest |(u, v, w)| seen at accepted steps
};

template <std::size_t N>
using OdeRhs = std::function<std::array<double, N>(double, const std::array<double, N>&)>;

// Integrates y' = f(t, y) from t0 to t1; `on_step` sees every accepted state.
template <std::size_t N>
std::array<double, N> dormand_prince(const OdeRhs<N>& f, std::array<double, N> y, double t0, double t1,
                                     const OdeOptions& opt, OdeStats* stats = nullptr,
                                     const std::function<void(double, const std::array<double, N>&)>& on_step = {}) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  using V = std::array<double, N>;
  auto axpy = [](const V& y0, double h, std::initializer_list<std::pair<double, const V*>> terms) {
    V out = y0;
    for (const auto& [c, k] : terms)
      for (std::size_t i = 0; i < N; ++i) out[i] += h * c * (*k)[i];
    return out;
  };
  OdeStats local;
  OdeStats& st = stats ? *stats : local;
  if (t1 <= t0) return y;
  double t = t0;
  double h = std::min(opt.h_initial, t1 - t0);
  V k1 = f(t, y);
  int rejections = 0;
  while (t < t1) {
    if (st.accepted + st.rejected > opt.max_steps)
      throw NumericalError("ODE step budget exhausted at t = " + std::to_string(t), h);
    h = std::min(h, t1 - t);
    const V k2 = f(t + c2 * h, axpy(y, h, {{a21, &k1}}));
    const V k3 = f(t + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
    const V k4 = f(t + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const V k5 = f(t + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const V k6 = f(t + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const V y5 = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const V k7 = f(t + h, y5);
    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err = std::max(err, std::abs(e) / sc);
    }
    if (!std::isfinite(err)) err = 1e10;
    if (err <= 1.0) {
      t += h;
      y = y5;
      k1 = k7;
      ++st.accepted;
      rejections = 0;
      double nrm = 0.0;
      for (double v : y) nrm += v * v;
      st.max_norm = std::max(st.max_norm, std::sqrt(nrm));
      if (on_step) on_step(t, y);
    } else {
      ++st.rejected;
      if (++rejections > opt.max_rejections)
        throw NumericalError("ODE step rejected " + std::to_string(rejections) + " times in a row at t = " +
                                 std::to_string(t) + " (h = " + std::to_string(h) + ")",
                             err);
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < opt.h_min && t < t1)
      throw NumericalError("ODE step size fell below " + std::to_string(opt.h_min) + " at t = " + std::to_string(t),
                           err);
  }
  return y;
}

struct BlochDrive {
  double omega = 0.0;     // Rabi frequency [rad/us]
  double delta0 = 0.0;    // detuning at the pulse center [rad/us]
  double sweep = 0.0;     // total linear chirp over the pulse [rad/us]
  double length = 1.0;    // [us]
  double gamma1 = 0.0;    // population decay [1/us]
  double gamma2 = 0.0;    // coherence decay [1/us]

  double detuning(double t) const { return delta0 + sweep * (t / length - 0.5); }
};

inline BlochState integrate_bloch(const BlochDrive& d, const OdeOptions& opt = {}, OdeStats* stats = nullptr) {
  require(d.length > 0.0, "pulse length must be positive");
  OdeRhs<3> rhs = [&d](double t, const BlochState& s) -> BlochState {
    const double dl = d.detuning(t);
    return {-dl * s[1] - d.gamma2 * s[0], dl * s[0] - d.omega * s[2] - d.gamma2 * s[1],
            d.omega * s[1] - d.gamma1 * (s[2] + 1.0)};
  };
  return dormand_prince<3>(rhs, {0.0, 0.0, -1.0}, 0.0, d.length, opt, stats);
}

inline double excited_population(const BlochState& s) { return 0.5 * (1.0 + s[2]); }

}  // namespace erpcw
