#pragma once

// Multilevel erbium decay: Y1 -> Z1..Z8 with per-transition Purcell factors.
//
//   A_i = p_i / tau_bulk,   tau' = 1 / sum_i F_i A_i,   p'_i = F_i A_i tau'
//
// Non-radiative decay is taken as zero.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "erpcw/bands.hpp"
#include "erpcw/constants.hpp"
#include "erpcw/errors.hpp"
#include "erpcw/geometry.hpp"
#include "erpcw/ldos.hpp"
#include "erpcw/parallel.hpp"

namespace erpcw {

inline constexpr int kLevels = 8;
using LevelArray = std::array<double, kLevels>;

inline constexpr double kBulkLifetimeUs = 142.0;
inline constexpr double kBulkBranchingZ1 = 0.23;
inline constexpr double kSpatialFactor = 0.217;
inline constexpr double kSiliconIndex = 3.45;

struct LevelScheme {
  double y1_frequency = nm_to_thz(1538.0);  // Y1 -> Z1 [THz]
  LevelArray z_offsets{};                   // [THz] below Y1 -> Z1, Z1 = 0

  double transition_frequency(int i) const { return y1_frequency - z_offsets.at(i); }
  static std::string label(int i) { return "Z" + std::to_string(i + 1); }

  void validate() const {
    require(y1_frequency > 0.0, "Y1 frequency must be positive");
    require(z_offsets[0] == 0.0, "Z1 offset must be zero");
    for (int i = 1; i < kLevels; ++i)
      require(z_offsets[i] > z_offsets[i - 1], "ground-level offsets must increase strictly from Z1");
    require(z_offsets.back() < y1_frequency, "ground-level offsets exceed the Y1 frequency");
  }
};

// Z2..Z8 transitions spread evenly over 1550-1650 nm.
inline LevelScheme default_level_scheme() {
  LevelScheme s;
  for (int i = 1; i < kLevels; ++i) {
    const double lambda = 1550.0 + 100.0 * (i - 1) / (kLevels - 2);
    s.z_offsets[i] = s.y1_frequency - nm_to_thz(lambda);
  }
  return s;
}

struct BranchingTable {
  LevelArray p{};

  void validate(double tol = 1e-9) const {
    double sum = 0.0;
    for (double v : p) {
      require(v >= 0.0, "branching fractions must be non-negative");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= tol, "branching fractions must sum to 1 (got " + std::to_string(sum) + ")");
  }
};

// p_Z1 = 0.23; the remainder split evenly over Z2..Z8.
inline BranchingTable default_branching(double p_z1 = kBulkBranchingZ1) {
  require(p_z1 >= 0.0 && p_z1 <= 1.0, "p_Z1 must lie in [0, 1]");
  BranchingTable b;
  b.p[0] = p_z1;
  for (int i = 1; i < kLevels; ++i) b.p[i] = (1.0 - p_z1) / (kLevels - 1);
  return b;
}

struct TransitionRates {
  LevelArray A{};         // [1/s]
  double A_total = 0.0;   // [1/s]
  double tau_bulk = 0.0;  // [us]
};

inline TransitionRates rates_from_bulk(double tau_bulk_us, const BranchingTable& branching) {
  require(tau_bulk_us > 0.0, "bulk lifetime must be positive");
  branching.validate();
  TransitionRates r;
  r.tau_bulk = tau_bulk_us;
  r.A_total = 1e6 / tau_bulk_us;
  for (int i = 0; i < kLevels; ++i) r.A[i] = r.A_total * branching.p[i];
  return r;
}

struct PurcellVector {
  LevelArray F{};

  static PurcellVector uniform(double f) {
    PurcellVector v;
    v.F.fill(f);
    return v;
  }
};

namespace detail {

inline double total_rate(const TransitionRates& r, const PurcellVector& f) {
  double s = 0.0;
  for (int i = 0; i < kLevels; ++i) {
    require(f.F[i] >= 0.0, "Purcell factors must be non-negative");
    s += f.F[i] * r.A[i];
  }
  if (!(s > 0.0)) throw InvalidArgument("no radiative decay channel left (all F_i A_i are zero)");
  return s;
}

}  // namespace detail

// [us]
inline double modified_lifetime(const TransitionRates& rates, const PurcellVector& purcell) {
  return 1e6 / detail::total_rate(rates, purcell);
}

inline BranchingTable modified_branching(const TransitionRates& rates, const PurcellVector& purcell) {
  const double s = detail::total_rate(rates, purcell);
  BranchingTable b;
  for (int i = 0; i < kLevels; ++i) b.p[i] = purcell.F[i] * rates.A[i] / s;
  return b;
}

// Slow-light waveguide Purcell factor for a dipole at the field maximum:
//   F = 3/(4 pi n) * (lambda^2/n^2) / (V_eff/a) * n_g
inline double purcell_max_veff(double ng, double n, double lambda_nm, double a_nm, double veff_nm3) {
  require(ng > 0.0 && n > 0.0 && lambda_nm > 0.0 && a_nm > 0.0 && veff_nm3 > 0.0,
          "Purcell inputs must be positive");
  const double l = lambda_nm / n;
  return 3.0 / (4.0 * kPi * n) * (l * l) / (veff_nm3 / a_nm) * ng;
}

// With V_eff = a (lambda/n)^2 / 3 this is 9 n_g / (4 pi n), independent of lambda and a.
inline double purcell_max(double ng, double n, double lambda_nm = 1538.0, double a_nm = 420.0) {
  const double l = lambda_nm / n;
  return purcell_max_veff(ng, n, lambda_nm, a_nm, a_nm * l * l / 3.0);
}

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

struct EmitterInstance {
  double x = 0.0;  // nm
  double y = 0.0;
  Vec3 dipole{0.0, 1.0, 0.0};
  double detuning_ghz = 0.0;
  double spectral_diffusion_fwhm_mhz = 0.0;

  void validate() const {
    require(std::abs(dipole.norm() - 1.0) <= 1e-9, "dipole orientation must be a unit vector");
    require(spectral_diffusion_fwhm_mhz >= 0.0, "spectral diffusion width must be non-negative");
  }
};

// In-plane guided-mode field on a pixel grid. Intensities are relative to
// the maximum of |E|^2 over the whole grid.
struct ModeProfile {
  EpsilonMap eps;
  std::vector<std::complex<double>> ex, ey;
  double max_intensity = 0.0;
  bool periodic_x = true;  // positions along x wrap onto one period

  void finalize() {
    require(ex.size() == eps.size() && ey.size() == eps.size(), "mode profile size mismatch");
    max_intensity = 0.0;
    for (std::size_t k = 0; k < ex.size(); ++k)
      max_intensity = std::max(max_intensity, std::norm(ex[k]) + std::norm(ey[k]));
    require(max_intensity > 0.0, "mode profile is identically zero");
  }

  std::size_t index_at(double x, double y) const {
    if (periodic_x) {
      const double w = eps.width();
      x = eps.x0() + std::fmod(std::fmod(x - eps.x0(), w) + w, w);
    }
    if (!eps.contains(x, y))
      throw InvalidArgument("position (" + std::to_string(x) + ", " + std::to_string(y) +
                            ") nm lies outside the mode profile");
    const int i = std::clamp(static_cast<int>(std::floor((x - eps.x0()) / eps.dx())), 0, eps.nx() - 1);
    const int j = std::clamp(static_cast<int>(std::floor((y - eps.y0()) / eps.dy())), 0, eps.ny() - 1);
    return static_cast<std::size_t>(j) * eps.nx() + i;
  }
};

inline ModeProfile make_mode_profile(const BandDiagram& d, const EpsilonMap& cell, int k_index, int band) {
  const ModeField f = mode_field(d, cell, k_index, band);
  ModeProfile p;
  p.eps = cell;
  p.ex = f.ex;
  p.ey = f.ey;
  p.finalize();
  return p;
}

// |e . E(r)|^2 / max |E|^2 for unit dipole e; the z component does not couple to TE modes.
inline double coupling_factor(const EmitterInstance& e, const ModeProfile& profile) {
  const std::size_t k = profile.index_at(e.x, e.y);
  const std::complex<double> proj = e.dipole.x * profile.ex[k] + e.dipole.y * profile.ey[k];
  return std::norm(proj) / profile.max_intensity;
}

inline double purcell_at(const EmitterInstance& e, const ModeProfile& profile, double f_max) {
  e.validate();
  require(f_max >= 0.0, "F_max must be non-negative");
  return f_max * coupling_factor(e, profile);
}

// F_2..F_8 from LDOS spectra (averaged over the list); F_1 is left at 1.
inline PurcellVector inhibition_vector(const std::vector<LdosSpectrum>& spectra, const LevelScheme& scheme) {
  require(!spectra.empty(), "no LDOS spectra given");
  PurcellVector v = PurcellVector::uniform(1.0);
  for (int i = 1; i < kLevels; ++i) {
    const double nu = scheme.transition_frequency(i);
    double sum = 0.0;
    for (const auto& s : spectra) {
      require(!s.nu.empty(), "empty LDOS spectrum");
      if (nu < s.nu.front() || nu > s.nu.back())
        throw InvalidArgument("transition Y1->" + LevelScheme::label(i) + " at " + std::to_string(nu) +
                              " THz lies outside the LDOS spectrum");
      sum += ldos_at(s, nu);
    }
    v.F[i] = sum / static_cast<double>(spectra.size());
  }
  return v;
}

// Lifetime with the Z1 channel scaled by spatial_factor * F_max and Z2..Z8 by the inhibition vector.
inline double mean_rate_lifetime(const TransitionRates& rates, double f_max, double spatial_factor,
                                 const PurcellVector& inhibition) {
  PurcellVector f = inhibition;
  f.F[0] = spatial_factor * f_max;
  return modified_lifetime(rates, f);
}

struct ZeemanModel {
  double tuning_ghz_per_t = 33.0;  // placeholder value, not from measurement
  double field_max_t = 3.0;
  bool placeholder = true;

  void validate() const {
    require(tuning_ghz_per_t >= 0.0, "Zeeman coefficient must be non-negative");
    require(field_max_t >= 0.0 && field_max_t <= 3.0, "field range must lie within 0-3 T");
  }

  // Frequencies nu0 + s * k * B for B in [0, B_max] on both Zeeman branches s = +-1, ascending.
  std::vector<double> frequencies(double nu0_thz, int points_per_branch) const {
    validate();
    require(points_per_branch >= 2, "need at least two field points");
    std::vector<double> out;
    for (int s = -1; s <= 1; s += 2)
      for (int k = 0; k < points_per_branch; ++k) {
        if (s > 0 && k == 0) continue;
        const double b = field_max_t * k / (points_per_branch - 1);
        out.push_back(nu0_thz + s * tuning_ghz_per_t * b * 1e-3);
      }
    std::sort(out.begin(), out.end());
    return out;
  }
};

// Linear interpolation of n_g at nu; the curve may be in either frequency order.
inline double ng_at(const GroupIndexCurve& c, double nu) {
  require(c.nu.size() >= 2 && c.nu.size() == c.ng.size(), "group-index curve needs at least two points");
  std::vector<std::size_t> order(c.nu.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.nu[a] < c.nu[b]; });
  const double lo = c.nu[order.front()], hi = c.nu[order.back()];
  if (nu < lo || nu > hi)
    throw InvalidArgument("frequency " + std::to_string(nu) + " THz outside the group-index curve [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
  for (std::size_t k = 1; k < order.size(); ++k) {
    const double x0 = c.nu[order[k - 1]], x1 = c.nu[order[k]];
    if (nu <= x1) {
      const double t = x1 > x0 ? (nu - x0) / (x1 - x0) : 0.0;
      return (1.0 - t) * c.ng[order[k - 1]] + t * c.ng[order[k]];
    }
  }
  return c.ng[order.back()];
}

struct ZeemanPoint {
  double nu = 0.0;      // THz
  double ng = 0.0;
  double tau_us = 0.0;
};

inline std::vector<ZeemanPoint> zeeman_lifetime_curve(const GroupIndexCurve& ng_curve, const TransitionRates& rates,
                                                      const PurcellVector& inhibition, double spatial_factor,
                                                      const std::vector<double>& nu_thz, double n = kSiliconIndex) {
  require(spatial_factor >= 0.0, "spatial factor must be non-negative");
  std::vector<ZeemanPoint> out;
  out.reserve(nu_thz.size());
  for (double nu : nu_thz) {
    const double ng = ng_at(ng_curve, nu);
    out.push_back({nu, ng, mean_rate_lifetime(rates, purcell_max(ng, n), spatial_factor, inhibition)});
  }
  return out;
}

struct EnsembleOptions {
  double region_half_height = 0.0;  // |y| bound of the implanted region [nm]; 0 selects the whole profile
  bool slab_only = true;            // reject positions in the holes
  double target_spatial_factor = 0.0;  // > 0: rescale couplings so their ensemble mean equals this
  int histogram_bins = 30;
  int jobs = 1;
};

struct EnsembleMember {
  EmitterInstance emitter;
  double coupling = 0.0;  // |e.E|^2 / max|E|^2, after any rescaling
  double tau_us = 0.0;
  double p_z1 = 0.0;
};

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};

inline Histogram make_histogram(const std::vector<double>& v, int bins) {
  require(bins >= 1, "histogram needs at least one bin");
  require(!v.empty(), "histogram of an empty sample");
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  double lo = *mn, hi = *mx;
  if (hi <= lo) hi = lo + 1.0;
  Histogram h;
  h.counts.assign(bins, 0);
  for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + (hi - lo) * b / bins);
  for (double x : v) {
    int b = static_cast<int>((x - lo) / (hi - lo) * bins);
    ++h.counts[std::clamp(b, 0, bins - 1)];
  }
  return h;
}

struct SampleStats {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  double skewness = 0.0;
};

inline SampleStats sample_stats(const std::vector<double>& v) {
  require(!v.empty(), "statistics of an empty sample");
  SampleStats s;
  const double n = static_cast<double>(v.size());
  for (double x : v) s.mean += x;
  s.mean /= n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double d = x - s.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  s.sd = v.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
  m2 /= n;
  m3 /= n;
  s.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  return s;
}

struct EnsembleResult {
  std::vector<EnsembleMember> members;
  SampleStats tau;
  SampleStats p_z1;
  double mean_coupling = 0.0;   // before rescaling
  double coupling_scale = 1.0;
  double f_max = 0.0;
  Histogram tau_histogram;
  Histogram p_z1_histogram;
};

// Independent stream per emitter so results do not depend on scheduling.
inline std::mt19937_64 emitter_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

inline Vec3 random_unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    Vec3 v{g(rng), g(rng), g(rng)};
    const double n = v.norm();
    if (n > 1e-12) return {v.x / n, v.y / n, v.z / n};
  }
}

namespace detail {

inline EmitterInstance random_emitter(const ModeProfile& profile, const EnsembleOptions& opt, std::mt19937_64& rng) {
  const EpsilonMap& g = profile.eps;
  double ylo = g.y0(), yhi = g.y0() + g.height();
  if (opt.region_half_height > 0.0) {
    ylo = std::max(ylo, -opt.region_half_height);
    yhi = std::min(yhi, opt.region_half_height);
  }
  require(yhi > ylo, "implanted region does not overlap the mode profile");
  const auto [emin, emax] = std::minmax_element(g.values().begin(), g.values().end());
  const double threshold = 0.5 * (*emin + *emax);
  std::uniform_real_distribution<double> ux(g.x0(), g.x0() + g.width());
  std::uniform_real_distribution<double> uy(ylo, yhi);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    EmitterInstance e;
    e.x = ux(rng);
    e.y = uy(rng);
    if (opt.slab_only && *emax > *emin && g.at(e.x, e.y) < threshold) continue;
    e.dipole = random_unit_vector(rng);
    return e;
  }
  throw InvalidArgument("implanted region contains no slab material");
}

}  // namespace detail

// Emitters uniform over the implanted region with isotropic dipoles. The Z1
// factor of each is F_max * coupling; Z2..Z8 use the inhibition vector.
inline EnsembleResult sample_ensemble(int n, const ModeProfile& profile, double f_max, const PurcellVector& inhibition,
                                      const TransitionRates& rates, std::uint64_t seed,
                                      const EnsembleOptions& opt = {}) {
  require(n >= 1, "ensemble size must be >= 1");
  require(f_max >= 0.0, "F_max must be non-negative");
  EnsembleResult r;
  r.f_max = f_max;
  r.members.resize(n);
  parallel_for(static_cast<std::size_t>(n), opt.jobs, [&](std::size_t i) {
    auto rng = emitter_rng(seed, i);
    EnsembleMember m;
    m.emitter = detail::random_emitter(profile, opt, rng);
    m.coupling = coupling_factor(m.emitter, profile);
    r.members[i] = m;
  });
  double sum = 0.0;
  for (const auto& m : r.members) sum += m.coupling;
  r.mean_coupling = sum / n;
  if (opt.target_spatial_factor > 0.0) {
    require(r.mean_coupling > 0.0, "ensemble has zero mean coupling; cannot calibrate");
    r.coupling_scale = opt.target_spatial_factor / r.mean_coupling;
  }
  std::vector<double> taus(n), pz1(n);
  for (int i = 0; i < n; ++i) {
    auto& m = r.members[i];
    m.coupling *= r.coupling_scale;
    PurcellVector f = inhibition;
    f.F[0] = f_max * m.coupling;
    m.tau_us = modified_lifetime(rates, f);
    m.p_z1 = modified_branching(rates, f).p[0];
    taus[i] = m.tau_us;
    pz1[i] = m.p_z1;
  }
  r.tau = sample_stats(taus);
  r.p_z1 = sample_stats(pz1);
  r.tau_histogram = make_histogram(taus, opt.histogram_bins);
  r.p_z1_histogram = make_histogram(pz1, opt.histogram_bins);
  return r;
}

}  // namespace erpcw
