#pragma once

// Fabry-Perot resonances of a dispersive section: adjacent modes are spaced so
// that integral n_g(nu) dnu = c / (2 L). Solved by Simpson quadrature and
// bisection, so no closed form of the n_g model is used.

#include <functional>
#include <vector>

namespace erpcw::oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// ng(nu) with nu in THz; returns `count` resonances in THz starting at nu0.
inline std::vector<double> dispersive_comb(const std::function<double(double)>& ng, double nu0, int count,
                                           double length_um, double c = 299792458.0) {
  const double target = c / (2.0 * length_um * 1e-6) * 1e-12;  // THz
  std::vector<double> out{nu0};
  for (int k = 1; k < count; ++k) {
    const double a = out.back();
    double lo = a, hi = a + 1e-6;
    while (simpson(ng, a, hi) < target) hi = a + 2.0 * (hi - a);
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (simpson(ng, a, mid) < target ? lo : hi) = mid;
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

}  // namespace erpcw::oracle
