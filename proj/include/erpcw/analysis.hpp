#pragma once

// Spectrum and time-tag analysis: prominence-gated peak detection, Lorentzian,
// exponential and reciprocal least-squares fits, g2 background correction,
// free-spectral-range group index and the filter-based branching estimate.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "erpcw/bands.hpp"
#include "erpcw/constants.hpp"
#include "erpcw/errors.hpp"
#include "erpcw/expsim.hpp"

namespace erpcw {

// ---------------------------------------------------------------- least squares

struct LsqOptions {
  int max_iterations = 200;
  double step_tol = 1e-10;  // relative parameter step
  double lambda0 = 1e-3;
};

struct LsqResult {
  Eigen::VectorXd p;
  Eigen::VectorXd sigma;  // 1 sigma, covariance scaled by the reduced residual
  double rss = 0.0;
  double reduced_chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Residual r(p) and Jacobian dr/dp for n data points, m parameters.
using ResidualFn = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& J)>;

// Damped Gauss-Newton with Levenberg damping on the diagonal of J^T J.
inline LsqResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd p, std::size_t n,
                                     const LsqOptions& opt = {}) {
  const auto m = p.size();
  Eigen::VectorXd r(n), r_try(n);
  Eigen::MatrixXd J(n, m), J_try(n, m);
  fn(p, r, J);
  double rss = r.squaredNorm();
  double lambda = opt.lambda0;
  LsqResult out;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    out.iterations = it;
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    bool improved = false;
    Eigen::VectorXd step;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::MatrixXd A = JtJ;
      for (Eigen::Index i = 0; i < m; ++i) A(i, i) += lambda * std::max(JtJ(i, i), 1e-300);
      step = A.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd p_try = p + step;
      fn(p_try, r_try, J_try);
      const double rss_try = r_try.allFinite() ? r_try.squaredNorm() : std::numeric_limits<double>::infinity();
      if (rss_try <= rss) {
        p = p_try;
        r.swap(r_try);
        J.swap(J_try);
        rss = rss_try;
        lambda = std::max(lambda / 10.0, 1e-15);
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    const double rel = step.norm() / (p.norm() + 1e-300);
    if (!improved || rel < opt.step_tol || rss == 0.0) {
      out.converged = improved ? true : (rel < 1e-6 || rss == 0.0);
      break;
    }
  }
  out.p = p;
  out.rss = rss;
  const double dof = std::max<double>(1.0, static_cast<double>(n) - static_cast<double>(m));
  out.reduced_chi2 = rss / dof;
  const Eigen::MatrixXd JtJ = J.transpose() * J;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(JtJ);
  out.sigma = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());
  if (lu.isInvertible()) {
    const Eigen::MatrixXd cov = lu.inverse() * out.reduced_chi2;
    for (Eigen::Index i = 0; i < m; ++i) out.sigma[i] = std::sqrt(std::max(cov(i, i), 0.0));
  }
  return out;
}

// ---------------------------------------------------------------- peaks

struct PeakWindow {
  std::size_t peak = 0;
  std::size_t left = 0;   // left prominence base (inclusive)
  std::size_t right = 0;  // right prominence base (inclusive)
  double prominence = 0.0;
};

// Local maxima (plateaus reported at their middle) with topographic prominence:
// each side is searched until a strictly higher sample or the edge; the base on
// that side is the lowest sample passed, and the prominence is the height above
// the higher of the two bases.
inline std::vector<PeakWindow> prominence_peaks(const std::vector<double>& x) {
  std::vector<PeakWindow> out;
  const std::size_t n = x.size();
  if (n < 3) return out;
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i - 1] < x[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        const std::size_t peak = (i + ahead - 1) / 2;
        PeakWindow w;
        w.peak = peak;
        std::size_t lmin_i = peak;
        double lmin = x[peak];
        for (std::size_t j = peak; j-- > 0;) {
          if (x[j] > x[peak]) break;
          if (x[j] < lmin) {
            lmin = x[j];
            lmin_i = j;
          }
        }
        std::size_t rmin_i = peak;
        double rmin = x[peak];
        for (std::size_t j = peak + 1; j < n; ++j) {
          if (x[j] > x[peak]) break;
          if (x[j] < rmin) {
            rmin = x[j];
            rmin_i = j;
          }
        }
        w.left = lmin_i;
        w.right = rmin_i;
        w.prominence = x[peak] - std::max(lmin, rmin);
        out.push_back(w);
        i = ahead;
        continue;
      }
      i = ahead;
      continue;
    }
    ++i;
  }
  return out;
}

// Peaks of the dark-floor-subtracted spectrum normalized to max 1, keeping
// those with prominence >= min_prominence.
inline std::vector<PeakWindow> find_peaks(const FluorescenceSpectrum& spec, double min_prominence) {
  spec.validate();
  require(spec.counts_per_pulse.size() >= 5, "peak search needs at least 5 samples");
  std::vector<double> y(spec.counts_per_pulse.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = spec.counts_per_pulse[k] - spec.dark_floor;
  const double top = *std::max_element(y.begin(), y.end());
  if (!(top > 0.0)) return {};
  for (double& v : y) v /= top;
  std::vector<PeakWindow> out;
  for (const auto& w : prominence_peaks(y))
    if (w.prominence >= min_prominence) out.push_back(w);
  return out;
}

// ---------------------------------------------------------------- Lorentzian

struct PeakFit {
  double center = 0.0, fwhm = 0.0, amplitude = 0.0, offset = 0.0;
  double s_center = 0.0, s_fwhm = 0.0, s_amplitude = 0.0, s_offset = 0.0;
  double goodness = 0.0;  // sqrt(rss / dof)
  int iterations = 0;
  bool converged = false;
};

inline double lorentzian_model(double x, double center, double fwhm, double amplitude, double offset) {
  const double h = 0.5 * fwhm;
  return amplitude * h * h / ((x - center) * (x - center) + h * h) + offset;
}

inline PeakFit fit_lorentzian(const std::vector<double>& x, const std::vector<double>& y, const LsqOptions& opt = {}) {
  require(x.size() == y.size(), "fit data columns differ in length");
  require(x.size() >= 5, "Lorentzian fit needs at least 5 points");
  const std::size_t n = x.size();
  const auto imax = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double lo = *std::min_element(y.begin(), y.end());
  const double amp0 = y[imax] - lo;
  double half_w = 0.0;
  {
    const double half = lo + 0.5 * amp0;
    std::size_t a = imax, b = imax;
    while (a > 0 && y[a] > half) --a;
    while (b + 1 < n && y[b] > half) ++b;
    half_w = std::abs(x[b] - x[a]);
    if (!(half_w > 0.0)) half_w = std::abs(x.back() - x.front()) / 4.0;
  }
  Eigen::VectorXd p(4);
  p << x[imax], half_w, std::max(amp0, 1e-300), lo;
  ResidualFn fn = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd& J) {
    const double x0 = q[0], h = 0.5 * q[1], A = q[2];
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x[i] - x0;
      const double den = d * d + h * h;
      const double L = h * h / den;
      r[i] = A * L + q[3] - y[i];
      J(i, 0) = A * 2.0 * d * h * h / (den * den);
      J(i, 1) = A * 0.5 * (2.0 * h * den - h * h * 2.0 * h) / (den * den);
      J(i, 2) = L;
      J(i, 3) = 1.0;
    }
  };
  const auto res = levenberg_marquardt(fn, p, n, opt);
  PeakFit f;
  f.center = res.p[0];
  f.fwhm = std::abs(res.p[1]);
  f.amplitude = res.p[2];
  f.offset = res.p[3];
  f.s_center = res.sigma[0];
  f.s_fwhm = res.sigma[1];
  f.s_amplitude = res.sigma[2];
  f.s_offset = res.sigma[3];
  f.goodness = std::sqrt(res.reduced_chi2);
  f.iterations = res.iterations;
  f.converged = res.converged && f.fwhm > 0.0 && f.amplitude > 0.0;
  return f;
}

inline PeakFit fit_peak_window(const FluorescenceSpectrum& spec, const PeakWindow& w, const LsqOptions& opt = {}) {
  std::size_t a = w.left, b = w.right;
  while (b - a + 1 < 5) {
    if (a > 0) --a;
    if (b + 1 < spec.detuning.size()) ++b;
    if (a == 0 && b + 1 == spec.detuning.size()) break;
  }
  std::vector<double> x(spec.detuning.begin() + a, spec.detuning.begin() + b + 1);
  std::vector<double> y(spec.counts_per_pulse.begin() + a, spec.counts_per_pulse.begin() + b + 1);
  return fit_lorentzian(x, y, opt);
}

// ---------------------------------------------------------------- exponential

struct DecayFit {
  double tau = 0.0, amplitude = 0.0, offset = 0.0;
  double s_tau = 0.0, s_amplitude = 0.0, s_offset = 0.0;
  double goodness = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Least squares of A exp(-t / tau) + B (B fixed at 0 when with_offset is false).
// Residuals are weighted by 1/sqrt(max(n, 1)) when poisson_weights is set.
inline DecayFit fit_exponential(const std::vector<double>& t, const std::vector<double>& counts,
                                bool with_offset = true, const LsqOptions& opt = {}, bool poisson_weights = true) {
  require(t.size() == counts.size(), "fit data columns differ in length");
  const auto nonzero = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; });
  require(nonzero >= 5, "exponential fit needs at least 5 non-empty bins");
  const std::size_t n = t.size();
  // Log-linear start on the positive bins.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] <= 0.0) continue;
    const double ly = std::log(counts[i]);
    sx += t[i];
    sy += ly;
    sxx += t[i] * t[i];
    sxy += t[i] * ly;
    m += 1.0;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  double tau0 = slope < 0.0 ? -1.0 / slope : (t.back() - t.front());
  const double A0 = std::exp((sy - slope * sx) / m);
  Eigen::VectorXd p(with_offset ? 3 : 2);
  if (with_offset)
    p << std::max(A0, 1e-300), tau0, 0.0;
  else
    p << std::max(A0, 1e-300), tau0;
  ResidualFn fn = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd& J) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = poisson_weights ? 1.0 / std::sqrt(std::max(counts[i], 1.0)) : 1.0;
      const double e = std::exp(-t[i] / q[1]);
      r[i] = w * (q[0] * e + (with_offset ? q[2] : 0.0) - counts[i]);
      J(i, 0) = w * e;
      J(i, 1) = w * q[0] * e * t[i] / (q[1] * q[1]);
      if (with_offset) J(i, 2) = w;
    }
  };
  const auto res = levenberg_marquardt(fn, p, n, opt);
  DecayFit f;
  f.amplitude = res.p[0];
  f.tau = res.p[1];
  f.offset = with_offset ? res.p[2] : 0.0;
  f.s_amplitude = res.sigma[0];
  f.s_tau = res.sigma[1];
  f.s_offset = with_offset ? res.sigma[2] : 0.0;
  f.goodness = std::sqrt(res.reduced_chi2);
  f.iterations = res.iterations;
  f.converged = res.converged && f.tau > 0.0;
  return f;
}

inline DecayFit fit_exponential(const DelayHistogram& h, bool with_offset = true, const LsqOptions& opt = {}) {
  return fit_exponential(h.t, h.counts, with_offset, opt, true);
}

// ---------------------------------------------------------------- g2

struct G2Result {
  double g2_raw = 0.0, g2_corrected = 0.0, rho = 0.0;
  double s_g2_raw = 0.0, s_g2_corrected = 0.0;
  bool clamped = false;
};

// rho = S / (S + B); g2_corr = (g2_raw - (1 - rho^2)) / rho^2.
inline G2Result correct_g2(double g2_raw, double signal_rate, double background_rate, double s_g2_raw = 0.0) {
  require(signal_rate >= 0.0 && background_rate >= 0.0, "rates must be non-negative");
  require(signal_rate + background_rate > 0.0, "signal and background rates are both zero");
  require(g2_raw >= 0.0, "raw g2 must be non-negative");
  G2Result r;
  r.g2_raw = g2_raw;
  r.s_g2_raw = s_g2_raw;
  r.rho = signal_rate / (signal_rate + background_rate);
  if (r.rho == 0.0) throw InvalidArgument("signal fraction is zero; g2 cannot be corrected");
  const double r2 = r.rho * r.rho;
  r.g2_corrected = (g2_raw - (1.0 - r2)) / r2;
  r.s_g2_corrected = s_g2_raw / r2;
  if (r.g2_corrected < 0.0) {
    r.g2_corrected = 0.0;
    r.clamped = true;
  }
  return r;
}

// Poisson error of g2(0) from the zero-lag coincidences.
inline double g2_zero_sigma(const G2Histogram& h) {
  const auto mid = h.lags.size() / 2;
  const double c0 = h.coincidences[mid];
  if (c0 <= 0.0 || h.g2_zero <= 0.0) return 0.0;
  return h.g2_zero / std::sqrt(c0);
}

// ---------------------------------------------------------------- group index

// Adjacent resonances nu_k (THz), resonator length L (um): n_g = c / (2 dnu L) at the pair midpoint.
inline GroupIndexCurve ng_from_fsr(const std::vector<double>& resonance_thz, double length_um,
                                   double c = kSpeedOfLight) {
  require(resonance_thz.size() >= 2, "need at least two resonances");
  require(length_um > 0.0, "resonator length must be positive");
  GroupIndexCurve g;
  for (std::size_t k = 0; k + 1 < resonance_thz.size(); ++k) {
    const double dnu = resonance_thz[k + 1] - resonance_thz[k];
    if (dnu == 0.0) throw InvalidArgument("duplicate resonance frequency at index " + std::to_string(k + 1));
    require(dnu > 0.0, "resonance frequencies must be sorted ascending");
    g.nu.push_back(0.5 * (resonance_thz[k] + resonance_thz[k + 1]));
    g.ng.push_back(c / (2.0 * dnu * 1e12 * length_um * 1e-6));
  }
  return g;
}

// Resonances of a Fabry-Perot section with n_g = A / (nu - nu_e): consecutive
// modes satisfy integral n_g dnu = c / (2 L), solved in closed form.
inline std::vector<double> reciprocal_comb(double A_thz, double nu_e, double nu_start, int count, double length_um,
                                           double c = kSpeedOfLight) {
  require(A_thz > 0.0, "reciprocal amplitude must be positive");
  require(nu_start > nu_e, "comb must start above the band edge");
  require(count >= 2, "comb needs at least two resonances");
  require(length_um > 0.0, "resonator length must be positive");
  const double step = c / (2.0 * length_um * 1e-6) * 1e-12;  // THz
  const double growth = std::exp(step / A_thz);
  std::vector<double> out{nu_start};
  for (int k = 1; k < count; ++k) out.push_back(nu_e + (out.back() - nu_e) * growth);
  return out;
}

struct ReciprocalFit {
  double A = 0.0, nu_e = 0.0;
  double s_A = 0.0, s_nu_e = 0.0;
  double goodness = 0.0;
  bool converged = false;

  double operator()(double nu) const { return A / (nu - nu_e); }
};

// n_g(nu) = A / (nu - nu_e); started from a straight-line fit of 1 / n_g.
inline ReciprocalFit fit_reciprocal(const GroupIndexCurve& curve, const LsqOptions& opt = {}) {
  require(curve.nu.size() == curve.ng.size(), "group index columns differ in length");
  require(curve.nu.size() >= 3, "reciprocal fit needs at least 3 points");
  const std::size_t n = curve.nu.size();
  ReciprocalFit f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    require(curve.ng[i] > 0.0, "group index must be positive");
    const double y = 1.0 / curve.ng[i];
    sx += curve.nu[i];
    sy += y;
    sxx += curve.nu[i] * curve.nu[i];
    sxy += curve.nu[i] * y;
  }
  const double den = n * sxx - sx * sx;
  const double slope = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  const double numin = *std::min_element(curve.nu.begin(), curve.nu.end());
  const double span = *std::max_element(curve.nu.begin(), curve.nu.end()) - numin;
  const double ymean = sy / n;
  if (!(std::abs(slope) * span > 1e-9 * std::abs(ymean)) || slope < 0.0) return f;  // degenerate or no edge below
  const double icpt = (sy - slope * sx) / n;
  Eigen::VectorXd p(2);
  p << 1.0 / slope, -icpt / slope;
  ResidualFn fn = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd& J) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = curve.nu[i] - q[1];
      r[i] = q[0] / d - curve.ng[i];
      J(i, 0) = 1.0 / d;
      J(i, 1) = q[0] / (d * d);
    }
  };
  const auto res = levenberg_marquardt(fn, p, n, opt);
  f.A = res.p[0];
  f.nu_e = res.p[1];
  f.s_A = res.sigma[0];
  f.s_nu_e = res.sigma[1];
  f.goodness = std::sqrt(res.reduced_chi2);
  f.converged = res.converged && f.nu_e < numin && f.A > 0.0;
  return f;
}

// ---------------------------------------------------------------- branching

struct BranchingEstimate {
  double value = 0.0;
  double sigma = 0.0;
  bool above_one = false;
};

inline BranchingEstimate branching_from_filter(double I_filter, double I_0, double chi, double s_filter = 0.0,
                                               double s_0 = 0.0, double s_chi = 0.0) {
  require(I_0 > 0.0, "unfiltered intensity must be positive");
  require(chi > 0.0 && chi <= 1.0, "filter transmission must lie in (0, 1]");
  require(I_filter >= 0.0, "filtered intensity must be non-negative");
  BranchingEstimate b;
  b.value = I_filter / (I_0 * chi);
  const double rf = I_filter > 0.0 ? s_filter / I_filter : 0.0;
  b.sigma = std::sqrt(I_filter > 0.0 ? b.value * b.value * (rf * rf + (s_0 / I_0) * (s_0 / I_0) +
                                                             (s_chi / chi) * (s_chi / chi))
                                     : (s_filter / (I_0 * chi)) * (s_filter / (I_0 * chi)));
  b.above_one = b.value > 1.0;
  return b;
}

struct HypothesisReport {
  double bound = 0.0, bound_sigma = 0.0;
  double measured = 0.0, measured_sigma = 0.0;
  double excess_sigma = 0.0;
  bool rejected = false;
};

// Detection probability under unchanged branching against a measured value;
// the filtering-only hypothesis is rejected at an excess above 3 combined sigma.
inline HypothesisReport filtering_hypothesis_test(const EfficiencyChain& chain, double measured, double measured_sigma,
                                                  double threshold_sigma = 3.0) {
  require(measured_sigma >= 0.0, "measured uncertainty must be non-negative");
  const auto c = chain_probability(chain);
  HypothesisReport h;
  h.bound = c.P;
  h.bound_sigma = c.sigma;
  h.measured = measured;
  h.measured_sigma = measured_sigma;
  const double s = std::hypot(c.sigma, measured_sigma);
  const double diff = measured - c.P;
  h.excess_sigma = s > 0.0 ? diff / s : (diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff));
  h.rejected = h.excess_sigma > threshold_sigma;
  return h;
}

// ---------------------------------------------------------------- I/O

inline FluorescenceSpectrum read_spectrum_csv(std::istream& is) {
  FluorescenceSpectrum s;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a, b;
    if (!(ls >> a >> b)) {
      if (s.detuning.empty()) continue;  // header
      throw InvalidArgument("malformed spectrum row at line " + std::to_string(lineno));
    }
    s.detuning.push_back(a);
    s.counts_per_pulse.push_back(b);
  }
  s.validate();
  return s;
}

inline void write_peaks_csv(std::ostream& os, const std::vector<PeakFit>& fits) {
  os << "center,fwhm,amplitude,offset,sigma_center,sigma_fwhm,sigma_amplitude,sigma_offset,goodness,converged\n"
     << std::setprecision(12);
  for (const auto& f : fits)
    os << f.center << ',' << f.fwhm << ',' << f.amplitude << ',' << f.offset << ',' << f.s_center << ',' << f.s_fwhm
       << ',' << f.s_amplitude << ',' << f.s_offset << ',' << f.goodness << ',' << (f.converged ? 1 : 0) << '\n';
}

inline void write_decay_csv(std::ostream& os, const std::vector<DecayFit>& fits) {
  os << "tau_us,amplitude,offset,sigma_tau,sigma_amplitude,sigma_offset,goodness,converged\n" << std::setprecision(12);
  for (const auto& f : fits)
    os << f.tau << ',' << f.amplitude << ',' << f.offset << ',' << f.s_tau << ',' << f.s_amplitude << ','
       << f.s_offset << ',' << f.goodness << ',' << (f.converged ? 1 : 0) << '\n';
}

inline nlohmann::json to_json(const PeakFit& f) {
  return {{"center", f.center},     {"fwhm", f.fwhm},         {"amplitude", f.amplitude},
          {"offset", f.offset},     {"sigma_center", f.s_center}, {"sigma_fwhm", f.s_fwhm},
          {"sigma_amplitude", f.s_amplitude}, {"goodness", f.goodness}, {"converged", f.converged}};
}

inline nlohmann::json to_json(const DecayFit& f) {
  return {{"tau_us", f.tau},         {"sigma_tau", f.s_tau}, {"amplitude", f.amplitude},
          {"offset", f.offset},      {"goodness", f.goodness}, {"converged", f.converged}};
}

inline nlohmann::json to_json(const G2Result& g) {
  return {{"g2_raw", g.g2_raw}, {"g2_corrected", g.g2_corrected}, {"rho", g.rho},
          {"sigma_g2_raw", g.s_g2_raw}, {"sigma_g2_corrected", g.s_g2_corrected}, {"clamped", g.clamped}};
}

inline nlohmann::json to_json(const ReciprocalFit& f) {
  return {{"A", f.A}, {"nu_e", f.nu_e}, {"sigma_A", f.s_A}, {"sigma_nu_e", f.s_nu_e}, {"converged", f.converged}};
}

inline nlohmann::json to_json(const BranchingEstimate& b) {
  return {{"value", b.value}, {"sigma", b.sigma}, {"above_one", b.above_one}};
}

inline nlohmann::json to_json(const HypothesisReport& h) {
  return {{"bound", h.bound},
          {"bound_sigma", h.bound_sigma},
          {"measured", h.measured},
          {"measured_sigma", h.measured_sigma},
          {"excess_sigma", h.excess_sigma},
          {"verdict", h.rejected ? "rejected" : "not rejected"}};
}

}  // namespace erpcw
