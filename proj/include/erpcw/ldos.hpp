#pragma once

// 2D FDTD (Yee grid, split-field PML) for local density of states at a dipole.
//
// Units inside the solver: lengths in nm, c = 1, so time is measured in nm/c.
// The LDOS estimator is the power delivered by the source current,
//   rho(nu) ~ -Re[ E(nu) . J*(nu) ] / |J(nu)|^2,
// accumulated by running DFTs at the source point. Only ratios to a bulk run
// on an identical grid are meaningful.
//
// TE (Ex, Ey, Hz) hosts in-plane dipoles; z dipoles run the scalar TM
// polarization (Ez, Hx, Hy) on the same map and are flagged as approximate.

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <ostream>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "erpcw/bands.hpp"
#include "erpcw/butterworth.hpp"
#include "erpcw/constants.hpp"
#include "erpcw/errors.hpp"
#include "erpcw/geometry.hpp"
#include "erpcw/parallel.hpp"

namespace erpcw {

enum class DipoleAxis { x, y, z };

inline const char* to_string(DipoleAxis a) {
  switch (a) {
    case DipoleAxis::x: return "x";
    case DipoleAxis::y: return "y";
    default: return "z";
  }
}

struct DipoleSource {
  double x = 0.0;  // nm
  double y = 0.0;
  DipoleAxis axis = DipoleAxis::y;
  double center_frequency = 190.0;  // THz
};

inline constexpr double kEnergyGrowthTolerance = 1e-6;

struct FdtdConfig {
  double courant = 0.5;
  double run_time = 2000.0;        // upper bound, in periods of the center frequency
  int pml_thickness = 16;          // cells
  double source_bandwidth = 0.2;   // full width of |J|^2 at -20 dB, fraction of the center frequency
  int n_freq = 301;
  double residual_threshold = 1e-6;  // stop once field energy falls below this fraction of its peak
  int energy_check_interval = 50;    // steps
  double pml_reflection = 1e-8;
  std::vector<int> pec_columns;    // Ey (TE) / Ez (TM) node columns forced to zero: mirror walls normal to x
  double dx = 0.0;                 // expected grid spacing [nm]; 0 accepts the map's
  long snapshot_step = -1;         // dump the source field component at this step (< 0: off)

  void validate() const {
    require(courant > 0.0 && courant <= 1.0 / std::sqrt(2.0) + 1e-12, "Courant number must lie in (0, 1/sqrt(2)]");
    require(pml_thickness >= 8, "PML must be at least 8 cells thick");
    require(run_time > 0.0, "run time must be positive");
    require(source_bandwidth > 0.0 && source_bandwidth < 2.0, "source bandwidth must lie in (0, 2)");
    require(n_freq >= 2, "need at least two frequency points");
    require(dx >= 0.0, "grid spacing must be non-negative");
  }
};

struct LdosSpectrum {
  std::vector<double> nu;       // THz
  std::vector<double> rho_rel;  // raw power before normalization, rho/rho_bulk after
  double x = 0.0;
  double y = 0.0;
  DipoleAxis axis = DipoleAxis::y;
  bool normalized = false;
  bool filtered = false;
  bool approximate_polarization = false;  // z dipole via scalar TM
  bool residual_warning = false;          // run ended before the energy criterion was met
  bool energy_monotone = true;            // field energy never grew after the source turned off
  double residual_energy = 0.0;           // final energy / peak energy
  double max_energy_growth = 0.0;         // largest relative rise between energy checks after source-off
  double run_periods = 0.0;
  std::size_t clamped_points = 0;
  std::optional<EpsilonMap> snapshot;     // field component driven by the source, on the map's pixel layout
};

namespace detail {

// Frequency in cycles per nm of c*t.
inline double thz_to_solver(double nu_thz) { return nu_thz * 1e12 / kSpeedOfLight * 1e-9; }

struct NodeWeight {
  std::size_t index;
  double weight;
};

// Bilinear weights of point (x, y) on a component grid whose node (i, j)
// sits at (xa + i dx, ya + j dy).
inline std::vector<NodeWeight> bilinear(double x, double y, double xa, double ya, double dx, double dy, int nx,
                                        int ny) {
  const double fx = (x - xa) / dx;
  const double fy = (y - ya) / dy;
  const int i0 = static_cast<int>(std::floor(fx));
  const int j0 = static_cast<int>(std::floor(fy));
  const double tx = fx - i0;
  const double ty = fy - j0;
  std::vector<NodeWeight> w;
  for (int dj = 0; dj <= 1; ++dj)
    for (int di = 0; di <= 1; ++di) {
      const double wt = (di ? tx : 1.0 - tx) * (dj ? ty : 1.0 - ty);
      if (wt < 1e-12) continue;
      const int i = i0 + di, j = j0 + dj;
      if (i < 0 || j < 0 || i >= nx || j >= ny) throw InvalidArgument("source outside the grid");
      w.push_back({static_cast<std::size_t>(j) * nx + i, wt});
    }
  return w;
}

// Graded PML rate at node coordinate `c` (in cells from the low edge) for a
// grid of `n` cells; zero in the interior.
inline double pml_rate(double c, int n, int thickness, double rate_max) {
  const double depth_lo = thickness - c;
  const double depth_hi = c - (n - thickness);
  const double d = std::max(depth_lo, depth_hi);
  if (d <= 0.0) return 0.0;
  const double u = std::min(d / thickness, 1.0);
  return rate_max * u * u * u;
}

struct Recorder {
  std::vector<double> omega;
  std::vector<std::complex<double>> e_acc, j_acc;
  std::vector<std::complex<double>> e_rot, j_rot, rot;  // running phasors

  Recorder(const std::vector<double>& freqs, double dt, double t_e0, double t_j0) {
    const std::size_t n = freqs.size();
    omega.resize(n);
    e_acc.assign(n, 0.0);
    j_acc.assign(n, 0.0);
    e_rot.resize(n);
    j_rot.resize(n);
    rot.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      omega[k] = 2.0 * kPi * freqs[k];
      rot[k] = std::polar(1.0, omega[k] * dt);
      e_rot[k] = std::polar(1.0, omega[k] * t_e0);
      j_rot[k] = std::polar(1.0, omega[k] * t_j0);
    }
  }

  void add(double e, double j, bool with_j) {
    for (std::size_t k = 0; k < omega.size(); ++k) {
      e_acc[k] += e * e_rot[k];
      e_rot[k] *= rot[k];
      if (with_j) j_acc[k] += j * j_rot[k];
      j_rot[k] *= rot[k];
    }
  }

  void renormalize() {
    for (std::size_t k = 0; k < omega.size(); ++k) {
      e_rot[k] /= std::abs(e_rot[k]);
      j_rot[k] /= std::abs(j_rot[k]);
    }
  }
};

struct PulseShape {
  double f0;     // solver units
  double tau;    // Gaussian envelope width
  double t0;     // envelope center
  double t_off;  // after this the source is off

  // Envelope weight subtracted so the pulse has zero net charge.
  double dc() const {
    const double a = 2.0 * kPi * f0 * tau;
    return std::exp(-0.5 * a * a);
  }

  double operator()(double t) const {
    if (t > t_off) return 0.0;
    const double s = (t - t0) / tau;
    return std::exp(-0.5 * s * s) * (std::cos(2.0 * kPi * f0 * (t - t0)) - dc());
  }
};

}  // namespace detail

// Frequency grid covering the -20 dB band of the source pulse.
inline std::vector<double> ldos_frequency_grid(const DipoleSource& src, const FdtdConfig& cfg) {
  const double half = 0.5 * cfg.source_bandwidth * src.center_frequency;
  std::vector<double> nu(cfg.n_freq);
  for (int k = 0; k < cfg.n_freq; ++k)
    nu[k] = src.center_frequency - half + 2.0 * half * k / (cfg.n_freq - 1);
  return nu;
}

class FdtdSimulation {
 public:
  FdtdSimulation(const EpsilonMap& map, const FdtdConfig& cfg) : map_(map), cfg_(cfg) {
    cfg_.validate();
    require(std::abs(map.dx() - map.dy()) <= 1e-9 * map.dx(), "FDTD needs square pixels");
    require(cfg.dx == 0.0 || std::abs(cfg.dx - map.dx()) <= 1e-9 * map.dx(),
            "configured dx does not match the permittivity map");
    require(map.nx() > 2 * cfg.pml_thickness + 2 && map.ny() > 2 * cfg.pml_thickness + 2,
            "grid too small for the PML");
    dx_ = map.dx();
    dt_ = cfg.courant * dx_;
  }

  double dt() const { return dt_; }

  LdosSpectrum run(const DipoleSource& src) const {
    require(src.center_frequency > 0.0, "source frequency must be positive");
    const double inner_x0 = map_.x0() + cfg_.pml_thickness * dx_;
    const double inner_x1 = map_.x0() + map_.width() - cfg_.pml_thickness * dx_;
    const double inner_y0 = map_.y0() + cfg_.pml_thickness * dx_;
    const double inner_y1 = map_.y0() + map_.height() - cfg_.pml_thickness * dx_;
    if (!(src.x > inner_x0 && src.x < inner_x1 && src.y > inner_y0 && src.y < inner_y1))
      throw InvalidArgument("dipole position must lie inside the non-PML region");
    return src.axis == DipoleAxis::z ? run_tm(src) : run_te(src);
  }

 private:
  struct Setup {
    std::vector<double> freqs_thz;
    std::vector<double> freqs;
    detail::PulseShape pulse;
    long max_steps;
    double rate_max;
  };

  Setup prepare(const DipoleSource& src) const {
    Setup s;
    s.freqs_thz = ldos_frequency_grid(src, cfg_);
    s.freqs.resize(s.freqs_thz.size());
    for (std::size_t k = 0; k < s.freqs.size(); ++k) s.freqs[k] = detail::thz_to_solver(s.freqs_thz[k]);
    const double f0 = detail::thz_to_solver(src.center_frequency);
    // |J(f)|^2 ~ exp(-(2 pi (f - f0) tau)^2): -20 dB at the band half-width.
    const double half = 0.5 * cfg_.source_bandwidth * f0;
    const double tau = std::sqrt(std::log(100.0)) / (2.0 * kPi * half);
    s.pulse = {f0, tau, 6.0 * tau, 12.0 * tau};
    const double t_max = cfg_.run_time / f0;
    s.max_steps = static_cast<long>(std::ceil(std::max(t_max, s.pulse.t_off) / dt_));
    double eps_sum = 0.0;
    for (double e : map_.values()) eps_sum += e;
    const double n_ref = std::sqrt(eps_sum / static_cast<double>(map_.size()));
    const double thick = cfg_.pml_thickness * dx_;
    // Cubic grading: round-trip reflection exp(-2 n/c * integral(rate)) = R.
    s.rate_max = 4.0 * -std::log(cfg_.pml_reflection) / (2.0 * n_ref * thick);
    return s;
  }

  EpsilonMap uniform_map(double v) const {
    return EpsilonMap(map_.nx(), map_.ny(), map_.dx(), map_.dy(), map_.x0(), map_.y0(), v);
  }

  static std::pair<double, double> coeffs(double rate, double dt) {
    const double den = 1.0 + 0.5 * rate * dt;
    return {(1.0 - 0.5 * rate * dt) / den, dt / den};
  }

  LdosSpectrum finish(const DipoleSource& src, const Setup& s, const detail::Recorder& rec, double peak,
                      double last, bool monotone, double growth, long steps) const {
    LdosSpectrum out;
    out.nu = s.freqs_thz;
    out.rho_rel.resize(out.nu.size());
    for (std::size_t k = 0; k < out.nu.size(); ++k) {
      const double jj = std::norm(rec.j_acc[k]);
      out.rho_rel[k] = jj > 0.0 ? -std::real(rec.e_acc[k] * std::conj(rec.j_acc[k])) / jj : 0.0;
    }
    out.x = src.x;
    out.y = src.y;
    out.axis = src.axis;
    out.approximate_polarization = src.axis == DipoleAxis::z;
    out.residual_energy = peak > 0.0 ? last / peak : 0.0;
    out.residual_warning = out.residual_energy > cfg_.residual_threshold;
    out.energy_monotone = monotone;
    out.max_energy_growth = growth;
    out.run_periods = steps * dt_ * s.pulse.f0;
    return out;
  }

  // Energy bookkeeping shared by both polarizations. Returns false to stop.
  struct EnergyWatch {
    double peak = 0.0;
    double last = 0.0;
    double prev = -1.0;
    bool monotone = true;
    double max_growth = 0.0;

    bool update(double w, bool source_off, double threshold) {
      if (!std::isfinite(w)) throw NumericalError("FDTD field energy is not finite (unstable run)", w);
      peak = std::max(peak, w);
      if (source_off) {
        if (prev > 0.0) max_growth = std::max(max_growth, w / prev - 1.0);
        if (prev >= 0.0 && w > prev * (1.0 + kEnergyGrowthTolerance) + 1e-300) monotone = false;
        if (w > 1e3 * peak) throw NumericalError("FDTD field energy blew up", w / peak);
        prev = w;
      }
      last = w;
      return !(source_off && peak > 0.0 && w < threshold * peak);
    }
  };

  LdosSpectrum run_te(const DipoleSource& src) const {
    const Setup s = prepare(src);
    const int nx = map_.nx(), ny = map_.ny();
    const std::size_t n = static_cast<std::size_t>(nx) * ny;
    const int pml = cfg_.pml_thickness;
    auto at = [nx](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };

    // Ex(i,j) at (i+1/2, j), Ey(i,j) at (i, j+1/2), Hz(i,j) at (i+1/2, j+1/2), in cells.
    std::vector<double> ex(n, 0.0), ey(n, 0.0), hzx(n, 0.0), hzy(n, 0.0);
    std::vector<double> inv_eps_x(n), inv_eps_y(n);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double e = map_(i, j);
        inv_eps_x[at(i, j)] = 2.0 / (e + map_(i, std::max(j - 1, 0)));
        inv_eps_y[at(i, j)] = 2.0 / (e + map_(std::max(i - 1, 0), j));
      }
    // Per-row / per-column PML coefficients.
    std::vector<double> ca_xn(nx), cb_xn(nx), ca_xh(nx), cb_xh(nx);
    std::vector<double> ca_yn(ny), cb_yn(ny), ca_yh(ny), cb_yh(ny);
    for (int i = 0; i < nx; ++i) {
      std::tie(ca_xn[i], cb_xn[i]) = coeffs(detail::pml_rate(i, nx, pml, s.rate_max), dt_);        // node column
      std::tie(ca_xh[i], cb_xh[i]) = coeffs(detail::pml_rate(i + 0.5, nx, pml, s.rate_max), dt_);  // half column
    }
    for (int j = 0; j < ny; ++j) {
      std::tie(ca_yn[j], cb_yn[j]) = coeffs(detail::pml_rate(j, ny, pml, s.rate_max), dt_);
      std::tie(ca_yh[j], cb_yh[j]) = coeffs(detail::pml_rate(j + 0.5, ny, pml, s.rate_max), dt_);
    }
    std::vector<char> pec_col(nx, 0);
    for (int c : cfg_.pec_columns) {
      require(c > 0 && c < nx, "PEC column out of range");
      pec_col[c] = 1;
    }

    const bool along_x = src.axis == DipoleAxis::x;
    const double xa = map_.x0() + (along_x ? 0.5 : 0.0) * dx_;
    const double ya = map_.y0() + (along_x ? 0.0 : 0.5) * dx_;
    const auto weights = detail::bilinear(src.x, src.y, xa, ya, dx_, dx_, nx, ny);
    std::vector<double>& e_src = along_x ? ex : ey;
    const std::vector<double>& inv_eps_src = along_x ? inv_eps_x : inv_eps_y;

    // E is recorded at integer steps after its update, J at half steps.
    detail::Recorder rec(s.freqs, dt_, dt_, 0.5 * dt_);
    EnergyWatch watch;
    std::optional<EpsilonMap> snapshot;
    std::vector<double> hz_prev;
    const double c = 1.0 / dx_;
    long step = 0;
    for (; step < s.max_steps; ++step) {
      const bool check = step % cfg_.energy_check_interval == 0;
      if (check) {
        hz_prev.resize(n);
        for (std::size_t k = 0; k < n; ++k) hz_prev[k] = hzx[k] + hzy[k];
      }
      // H update: dHz/dt = dEx/dy - dEy/dx.
      for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
          const std::size_t k = at(i, j);
          const double ey_r = (i + 1 < nx) ? ey[at(i + 1, j)] : 0.0;
          const double ex_u = (j + 1 < ny) ? ex[at(i, j + 1)] : 0.0;
          hzx[k] = ca_xh[i] * hzx[k] - cb_xh[i] * c * (ey_r - ey[k]);
          hzy[k] = ca_yh[j] * hzy[k] + cb_yh[j] * c * (ex_u - ex[k]);
        }
      }
      // Discrete Yee energy: eps E^n.E^n + H^{n-1/2} H^{n+1/2}.
      double wsum = 0.0;
      if (check)
        for (std::size_t k = 0; k < n; ++k) {
          wsum += ex[k] * ex[k] / inv_eps_x[k] + ey[k] * ey[k] / inv_eps_y[k];
          wsum += hz_prev[k] * (hzx[k] + hzy[k]);
        }
      // E update.
      const double t_half = (step + 0.5) * dt_;
      const double j_now = s.pulse(t_half);
      for (int j = 1; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
          const std::size_t k = at(i, j);
          const double dhz = (hzx[k] + hzy[k]) - (hzx[k - nx] + hzy[k - nx]);
          ex[k] = ca_yn[j] * ex[k] + cb_yn[j] * inv_eps_x[k] * c * dhz;
        }
      }
      for (int j = 0; j < ny; ++j) {
        for (int i = 1; i < nx; ++i) {
          const std::size_t k = at(i, j);
          if (pec_col[i]) {
            ey[k] = 0.0;
            continue;
          }
          const double dhz = (hzx[k] + hzy[k]) - (hzx[k - 1] + hzy[k - 1]);
          ey[k] = ca_xn[i] * ey[k] - cb_xn[i] * inv_eps_y[k] * c * dhz;
        }
      }
      if (j_now != 0.0)
        for (const auto& w : weights) e_src[w.index] -= dt_ * w.weight * j_now * inv_eps_src[w.index];
      if (step == cfg_.snapshot_step) {
        snapshot = uniform_map(0.0);
        snapshot->values() = e_src;
      }
      double e_probe = 0.0;
      for (const auto& w : weights) e_probe += w.weight * e_src[w.index];
      rec.add(e_probe, j_now, true);
      if (step % 4096 == 0) rec.renormalize();

      if (check) {
        const bool off = (step - 1) * dt_ > s.pulse.t_off;
        if (!watch.update(std::abs(wsum), off, cfg_.residual_threshold)) {
          ++step;
          break;
        }
      }
    }
    LdosSpectrum out = finish(src, s, rec, watch.peak, watch.last, watch.monotone, watch.max_growth, step);
    out.snapshot = std::move(snapshot);
    return out;
  }

  LdosSpectrum run_tm(const DipoleSource& src) const {
    const Setup s = prepare(src);
    const int nx = map_.nx(), ny = map_.ny();
    const std::size_t n = static_cast<std::size_t>(nx) * ny;
    const int pml = cfg_.pml_thickness;
    auto at = [nx](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };

    // Ez(i,j) at pixel centers (i+1/2, j+1/2); Hx(i,j) at (i+1/2, j); Hy(i,j) at (i, j+1/2).
    std::vector<double> ezx(n, 0.0), ezy(n, 0.0), hx(n, 0.0), hy(n, 0.0);
    std::vector<double> inv_eps(n);
    for (std::size_t k = 0; k < n; ++k) inv_eps[k] = 1.0 / map_.values()[k];
    std::vector<double> ca_xn(nx), cb_xn(nx), ca_xh(nx), cb_xh(nx);
    std::vector<double> ca_yn(ny), cb_yn(ny), ca_yh(ny), cb_yh(ny);
    for (int i = 0; i < nx; ++i) {
      std::tie(ca_xn[i], cb_xn[i]) = coeffs(detail::pml_rate(i, nx, pml, s.rate_max), dt_);
      std::tie(ca_xh[i], cb_xh[i]) = coeffs(detail::pml_rate(i + 0.5, nx, pml, s.rate_max), dt_);
    }
    for (int j = 0; j < ny; ++j) {
      std::tie(ca_yn[j], cb_yn[j]) = coeffs(detail::pml_rate(j, ny, pml, s.rate_max), dt_);
      std::tie(ca_yh[j], cb_yh[j]) = coeffs(detail::pml_rate(j + 0.5, ny, pml, s.rate_max), dt_);
    }
    std::vector<char> pec_col(nx, 0);
    for (int c : cfg_.pec_columns) {
      require(c > 0 && c < nx, "PEC column out of range");
      pec_col[c] = 1;
    }

    const auto weights =
        detail::bilinear(src.x, src.y, map_.x0() + 0.5 * dx_, map_.y0() + 0.5 * dx_, dx_, dx_, nx, ny);
    detail::Recorder rec(s.freqs, dt_, dt_, 0.5 * dt_);
    EnergyWatch watch;
    std::optional<EpsilonMap> snapshot;
    std::vector<double> hx_prev, hy_prev;
    const double c = 1.0 / dx_;
    long step = 0;
    for (; step < s.max_steps; ++step) {
      const bool check = step % cfg_.energy_check_interval == 0;
      if (check) {
        hx_prev = hx;
        hy_prev = hy;
      }
      // dHx/dt = -dEz/dy, dHy/dt = dEz/dx.
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const std::size_t k = at(i, j);
          const double ez = ezx[k] + ezy[k];
          const double ez_d = j > 0 ? ezx[k - nx] + ezy[k - nx] : 0.0;
          const double ez_l = i > 0 ? ezx[k - 1] + ezy[k - 1] : 0.0;
          hx[k] = ca_yn[j] * hx[k] - cb_yn[j] * c * (ez - ez_d);
          hy[k] = ca_xn[i] * hy[k] + cb_xn[i] * c * (ez - ez_l);
        }
      double wsum = 0.0;
      if (check)
        for (std::size_t k = 0; k < n; ++k) {
          const double ez = ezx[k] + ezy[k];
          wsum += ez * ez * map_.values()[k] + hx_prev[k] * hx[k] + hy_prev[k] * hy[k];
        }
      const double t_half = (step + 0.5) * dt_;
      const double j_now = s.pulse(t_half);
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const std::size_t k = at(i, j);
          if (pec_col[i]) {
            ezx[k] = ezy[k] = 0.0;
            continue;
          }
          const double hy_r = i + 1 < nx ? hy[k + 1] : 0.0;
          const double hx_u = j + 1 < ny ? hx[k + nx] : 0.0;
          ezx[k] = ca_xh[i] * ezx[k] + cb_xh[i] * inv_eps[k] * c * (hy_r - hy[k]);
          ezy[k] = ca_yh[j] * ezy[k] - cb_yh[j] * inv_eps[k] * c * (hx_u - hx[k]);
        }
      if (j_now != 0.0)
        for (const auto& w : weights) {
          // Split the source evenly between the two partial fields.
          const double d = dt_ * w.weight * j_now * inv_eps[w.index];
          ezx[w.index] -= 0.5 * d;
          ezy[w.index] -= 0.5 * d;
        }
      if (step == cfg_.snapshot_step) {
        snapshot = uniform_map(0.0);
        for (std::size_t k = 0; k < n; ++k) snapshot->values()[k] = ezx[k] + ezy[k];
      }
      double e_probe = 0.0;
      for (const auto& w : weights) e_probe += w.weight * (ezx[w.index] + ezy[w.index]);
      rec.add(e_probe, j_now, true);
      if (step % 4096 == 0) rec.renormalize();

      if (check) {
        const bool off = (step - 1) * dt_ > s.pulse.t_off;
        if (!watch.update(std::abs(wsum), off, cfg_.residual_threshold)) {
          ++step;
          break;
        }
      }
    }
    LdosSpectrum out = finish(src, s, rec, watch.peak, watch.last, watch.monotone, watch.max_growth, step);
    out.snapshot = std::move(snapshot);
    return out;
  }

  EpsilonMap map_;
  FdtdConfig cfg_;
  double dx_ = 1.0;
  double dt_ = 1.0;
};

inline LdosSpectrum run_fdtd_ldos(const EpsilonMap& device, const DipoleSource& source, const FdtdConfig& cfg) {
  return FdtdSimulation(device, cfg).run(source);
}

// Uniform map with the same grid as `device`, filled with permittivity `eps`.
inline EpsilonMap uniform_like(const EpsilonMap& device, double eps) {
  return EpsilonMap(device.nx(), device.ny(), device.dx(), device.dy(), device.x0(), device.y0(), eps);
}

inline LdosSpectrum normalize_to_bulk(const LdosSpectrum& raw, const LdosSpectrum& bulk) {
  require(raw.nu.size() == bulk.nu.size(), "spectra have different frequency grids");
  for (std::size_t k = 0; k < raw.nu.size(); ++k)
    require(std::abs(raw.nu[k] - bulk.nu[k]) <= 1e-9 * std::abs(bulk.nu[k]),
            "spectra have different frequency grids");
  LdosSpectrum out = raw;
  for (std::size_t k = 0; k < raw.nu.size(); ++k) {
    if (!(bulk.rho_rel[k] > 0.0))
      throw InvalidArgument("bulk LDOS is not positive at " + std::to_string(bulk.nu[k]) + " THz");
    out.rho_rel[k] = raw.rho_rel[k] / bulk.rho_rel[k];
  }
  out.normalized = true;
  return out;
}

inline constexpr double kLdosFilterCutoff = 0.2;  // fraction of Nyquist

// Zero-phase 2nd-order Butterworth over the frequency bins; negative outputs
// are clamped to zero and counted.
inline LdosSpectrum butterworth_postfilter(const LdosSpectrum& in, double cutoff = kLdosFilterCutoff) {
  const std::size_t n = in.nu.size();
  if (n <= kFiltfiltPad)
    throw InvalidArgument("LDOS post-filter needs at least " + std::to_string(kFiltfiltPad + 1) + " samples");
  const double step = (in.nu.back() - in.nu.front()) / static_cast<double>(n - 1);
  for (std::size_t k = 1; k < n; ++k)
    require(std::abs(in.nu[k] - in.nu[k - 1] - step) <= 1e-6 * std::abs(step), "LDOS post-filter needs uniform bins");
  LdosSpectrum out = in;
  out.rho_rel = filtfilt(butterworth_lowpass2(cutoff), in.rho_rel);
  out.clamped_points = 0;
  for (double& v : out.rho_rel)
    if (v < 0.0) {
      v = 0.0;
      ++out.clamped_points;
    }
  out.filtered = true;
  return out;
}

// Linear interpolation of rho_rel at nu (THz); throws outside the spectrum.
inline double ldos_at(const LdosSpectrum& s, double nu) {
  require(!s.nu.empty(), "empty spectrum");
  if (nu < s.nu.front() || nu > s.nu.back())
    throw InvalidArgument("frequency " + std::to_string(nu) + " THz outside the LDOS spectrum");
  auto it = std::upper_bound(s.nu.begin(), s.nu.end(), nu);
  if (it == s.nu.end()) return s.rho_rel.back();
  const std::size_t k = static_cast<std::size_t>(it - s.nu.begin());
  if (k == 0) return s.rho_rel.front();
  const double t = (nu - s.nu[k - 1]) / (s.nu[k] - s.nu[k - 1]);
  return (1.0 - t) * s.rho_rel[k - 1] + t * s.rho_rel[k];
}

struct ScanPoint {
  double x = 0.0;
  double y = 0.0;
};

// One filtered, bulk-normalized spectrum per (position, orientation), in
// position-major order. The bulk reference uses a uniform map of permittivity
// `bulk_eps` (default: the largest permittivity present in the device).
inline std::vector<LdosSpectrum> ldos_position_scan(const EpsilonMap& device, const std::vector<ScanPoint>& positions,
                                                    const std::vector<DipoleAxis>& orientations, double center_thz,
                                                    const FdtdConfig& cfg, int jobs = 1, double bulk_eps = 0.0,
                                                    double filter_cutoff = kLdosFilterCutoff) {
  if (positions.empty() || orientations.empty()) return {};
  if (bulk_eps <= 0.0) bulk_eps = *std::max_element(device.values().begin(), device.values().end());
  const EpsilonMap bulk_map = uniform_like(device, bulk_eps);
  const FdtdSimulation dev_sim(device, cfg);
  const FdtdSimulation bulk_sim(bulk_map, cfg);
  const double cx = device.x0() + 0.5 * device.width();
  const double cy = device.y0() + 0.5 * device.height();
  // Bulk reference per orientation (TE x and y are equivalent in a uniform medium but cheap to run).
  std::vector<LdosSpectrum> bulk(orientations.size());
  parallel_for(orientations.size(), jobs,
               [&](std::size_t o) { bulk[o] = bulk_sim.run({cx, cy, orientations[o], center_thz}); });
  std::vector<LdosSpectrum> out(positions.size() * orientations.size());
  parallel_for(out.size(), jobs, [&](std::size_t idx) {
    const std::size_t p = idx / orientations.size();
    const std::size_t o = idx % orientations.size();
    const LdosSpectrum raw = dev_sim.run({positions[p].x, positions[p].y, orientations[o], center_thz});
    LdosSpectrum norm = normalize_to_bulk(raw, bulk[o]);
    norm.residual_warning = raw.residual_warning || bulk[o].residual_warning;
    out[idx] = butterworth_postfilter(norm, filter_cutoff);
  });
  return out;
}

// Positions of the |Ey| and |Ex| maxima of a stored guided mode, in the
// coordinates of the cell the diagram was solved on.
struct ModeMaxima {
  ScanPoint ey_max;
  ScanPoint ex_max;
};

inline ModeMaxima mode_maxima(const BandDiagram& d, const EpsilonMap& cell, int k_index, int band) {
  const ModeField f = mode_field(d, cell, k_index, band);
  auto argmax = [&](const std::vector<std::complex<double>>& v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
      if (std::abs(v[k]) > std::abs(v[best])) best = k;
    const int i = static_cast<int>(best % cell.nx());
    const int j = static_cast<int>(best / cell.nx());
    return ScanPoint{cell.x_center(i), cell.y_center(j)};
  };
  return {argmax(f.ey), argmax(f.ex)};
}

inline void write_ldos_csv(std::ostream& os, const LdosSpectrum& s) {
  os << "nu_THz,rho_rel\n" << std::setprecision(12);
  for (std::size_t k = 0; k < s.nu.size(); ++k) os << s.nu[k] << ',' << s.rho_rel[k] << '\n';
}

inline nlohmann::json ldos_to_json(const LdosSpectrum& s) {
  nlohmann::json j;
  j["position_nm"] = {s.x, s.y};
  j["orientation"] = to_string(s.axis);
  j["normalized"] = s.normalized;
  j["filtered"] = s.filtered;
  j["approximate_polarization"] = s.approximate_polarization;
  j["residual_warning"] = s.residual_warning;
  j["residual_energy"] = s.residual_energy;
  j["energy_monotone"] = s.energy_monotone;
  j["max_energy_growth"] = s.max_energy_growth;
  j["run_periods"] = s.run_periods;
  j["clamped_points"] = s.clamped_points;
  j["nu_THz"] = s.nu;
  j["rho_rel"] = s.rho_rel;
  return j;
}

}  // namespace erpcw
