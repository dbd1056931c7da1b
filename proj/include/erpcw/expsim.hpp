#pragma once

// Synthetic pulsed resonant-fluorescence experiments: chirped-pulse excitation,
// spectral diffusion, exponential emission, detection chain and dark counts.
// Times in us, laser and emitter frequencies in MHz.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "erpcw/bloch.hpp"
#include "erpcw/constants.hpp"
#include "erpcw/emitter.hpp"
#include "erpcw/errors.hpp"
#include "erpcw/grid_io.hpp"
#include "erpcw/parallel.hpp"

namespace erpcw {

struct PulseSequence {
  double pulse_length = 2.0;        // us
  double chirp_width = 10.0;        // MHz, full sweep
  int repetitions = 8000;
  double detection_window = 600.0;  // us
  double rep_period = 700.0;        // us
  std::vector<double> laser_detuning_grid;  // MHz

  void validate() const {
    require(pulse_length > 0.0, "pulse length must be positive");
    require(chirp_width >= 0.0, "chirp width must be non-negative");
    require(repetitions >= 1, "need at least one repetition");
    require(detection_window > 0.0, "detection window must be positive");
    require(detection_window <= rep_period - pulse_length + 1e-12,
            "detection window must fit in the repetition period after the pulse");
  }
};

struct EfficiencyTerm {
  std::string name;
  double value = 1.0;
  double sigma = 0.0;
};

struct EfficiencyChain {
  double eta_exc = 0.50, P_Z1 = 0.23, beta = 1.0, eta_sc = 0.92, eta_ftc = 0.73, eta_ft = 0.90, eta_bs = 0.95,
         eta_os = 0.78, eta_flt = 0.476, eta_qe = 0.75;
  double s_eta_exc = 0.0, s_P_Z1 = 0.05, s_beta = 0.0, s_eta_sc = 0.02, s_eta_ftc = 0.04, s_eta_ft = 0.01,
         s_eta_bs = 0.015, s_eta_os = 0.01, s_eta_flt = 0.005, s_eta_qe = 0.05;

  std::vector<EfficiencyTerm> terms() const {
    return {{"eta_exc", eta_exc, s_eta_exc}, {"P_Z1", P_Z1, s_P_Z1},       {"beta", beta, s_beta},
            {"eta_sc", eta_sc, s_eta_sc},    {"eta_ftc", eta_ftc, s_eta_ftc}, {"eta_ft", eta_ft, s_eta_ft},
            {"eta_bs", eta_bs, s_eta_bs},    {"eta_os", eta_os, s_eta_os},  {"eta_flt", eta_flt, s_eta_flt},
            {"eta_qe", eta_qe, s_eta_qe}};
  }

  void validate() const {
    for (const auto& t : terms()) {
      require(t.value >= 0.0 && t.value <= 1.0, "efficiency term " + t.name + " must lie in [0, 1]");
      require(t.sigma >= 0.0, "uncertainty of " + t.name + " must be non-negative");
    }
  }

  // Transmission from the waveguide mode to the detector input, without the filter.
  double transport() const { return beta * eta_sc * eta_ftc * eta_ft * eta_bs * eta_os; }
};

struct ChainResult {
  double P = 0.0;
  double sigma = 0.0;
};

// Product of all terms; first-order error propagation, sigma^2 = sum_i (P / x_i * s_i)^2
// written with the partial products so zero terms are handled.
inline ChainResult chain_probability(const EfficiencyChain& chain) {
  chain.validate();
  const auto t = chain.terms();
  ChainResult r;
  r.P = 1.0;
  for (const auto& x : t) r.P *= x.value;
  double var = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double others = 1.0;
    for (std::size_t j = 0; j < t.size(); ++j)
      if (j != i) others *= t[j].value;
    var += others * others * t[i].sigma * t[i].sigma;
  }
  r.sigma = std::sqrt(var);
  return r;
}

struct DetectorModel {
  double dark_count_rate = 10.0;  // 1/s
  double quantum_efficiency = 0.75;
  double dead_time = 0.0;         // ns

  void validate() const {
    require(dark_count_rate >= 0.0, "dark count rate must be non-negative");
    require(quantum_efficiency >= 0.0 && quantum_efficiency <= 1.0, "quantum efficiency must lie in [0, 1]");
    require(dead_time >= 0.0, "dead time must be non-negative");
  }
};

enum class DephasingMode { fast, slow };

struct ExcitationOptions {
  int detuning_points = 64;     // Lorentzian quadrature nodes
  double gamma2_mhz = 10.0;     // coherence decay rate in fast-dephasing mode [MHz, as 1/(2 pi T2)]
  double lifetime_us = 0.0;     // > 0 adds population decay during the pulse
  OdeOptions ode{};
};

namespace detail {

// Excited population after one chirped pulse at fixed centre detuning (MHz).
inline double pulse_population(double rabi_mhz, double detuning_mhz, const PulseSequence& seq, DephasingMode mode,
                               const ExcitationOptions& opt) {
  const double two_pi = 2.0 * kPi;
  BlochDrive d;
  d.omega = two_pi * rabi_mhz;
  d.delta0 = two_pi * detuning_mhz;
  d.sweep = two_pi * seq.chirp_width;
  d.length = seq.pulse_length;
  d.gamma1 = opt.lifetime_us > 0.0 ? 1.0 / opt.lifetime_us : 0.0;
  if (mode == DephasingMode::slow) {
    OdeStats st;
    const BlochState s = integrate_bloch(d, opt.ode, &st);
    if (st.max_norm > 1.0 + 1e-9) throw NumericalError("Bloch vector left the unit ball", st.max_norm);
    return excited_population(s);
  }
  // Rate-equation limit: rho' = R (1 - 2 rho) - g1 rho with R = Omega^2 g2 / (2 (g2^2 + delta^2)).
  const double g2 = two_pi * opt.gamma2_mhz;
  require(g2 > 0.0, "fast dephasing needs a positive coherence decay rate");
  OdeRhs<1> rhs = [&](double t, const std::array<double, 1>& y) -> std::array<double, 1> {
    const double dl = d.detuning(t);
    const double r = d.omega * d.omega * g2 / (2.0 * (g2 * g2 + dl * dl));
    return {r * (1.0 - 2.0 * y[0]) - d.gamma1 * y[0]};
  };
  return dormand_prince<1>(rhs, {0.0}, 0.0, d.length, opt.ode)[0];
}

}  // namespace detail

// Mean excited population after one pulse, averaged over a Lorentzian of
// spectral-diffusion detunings with FWHM diffusion_fwhm (MHz) centred on the
// laser. Quadrature: delta = (G/2) tan(theta), theta on a midpoint grid.
inline double excitation_probability(double rabi_mhz, const PulseSequence& seq, double diffusion_fwhm,
                                     DephasingMode mode, const ExcitationOptions& opt = {},
                                     double center_detuning_mhz = 0.0) {
  require(rabi_mhz >= 0.0, "Rabi frequency must be non-negative");
  require(diffusion_fwhm >= 0.0, "diffusion width must be non-negative");
  require(opt.detuning_points >= 1, "need at least one detuning node");
  if (rabi_mhz == 0.0) return 0.0;
  if (diffusion_fwhm == 0.0) return detail::pulse_population(rabi_mhz, center_detuning_mhz, seq, mode, opt);
  const int n = opt.detuning_points;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double theta = -0.5 * kPi + kPi * (k + 0.5) / n;
    const double delta = center_detuning_mhz + 0.5 * diffusion_fwhm * std::tan(theta);
    sum += detail::pulse_population(rabi_mhz, delta, seq, mode, opt);
  }
  return sum / n;
}

// Rabi frequency (MHz) with excitation_probability == target, by bisection on [lo, hi].
struct RabiSearch {
  double rabi_mhz = 0.0;
  double eta = 0.0;
  bool bracketed = false;
};

inline RabiSearch find_rabi_frequency(double target, double lo, double hi, const PulseSequence& seq,
                                      double diffusion_fwhm, DephasingMode mode, const ExcitationOptions& opt = {},
                                      int iterations = 40) {
  require(hi > lo && lo >= 0.0, "invalid Rabi bracket");
  auto f = [&](double r) { return excitation_probability(r, seq, diffusion_fwhm, mode, opt) - target; };
  double flo = f(lo), fhi = f(hi);
  RabiSearch out;
  if (flo * fhi > 0.0) {
    const bool low_closer = std::abs(flo) < std::abs(fhi);
    out.rabi_mhz = low_closer ? lo : hi;
    out.eta = target + (low_closer ? flo : fhi);
    return out;
  }
  out.bracketed = true;
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm <= 0.0) == (flo <= 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  out.rabi_mhz = 0.5 * (lo + hi);
  out.eta = f(out.rabi_mhz) + target;
  return out;
}

// Unit-peak Lorentzian.
inline double lorentzian_unit(double x, double fwhm) {
  if (fwhm <= 0.0) return x == 0.0 ? 1.0 : 0.0;
  const double h = 0.5 * fwhm;
  return h * h / (x * x + h * h);
}

struct EmitterSource {
  EmitterInstance emitter;
  double tau_us = kBulkLifetimeUs;
  double p_z1 = kBulkBranchingZ1;
};

struct LineEnsembleOptions {
  int count = 30;
  double spread_ghz = 12.0;   // full width of the uniform inhomogeneous distribution
  double fwhm_mean = 27.0;    // MHz
  double fwhm_sd = 12.0;
  double fwhm_floor = 13.0;
  double tau_us = 295.0;
  double p_z1 = kBulkBranchingZ1;
};

// Emitters with uniform detunings in [-spread/2, spread/2] and normal
// diffusion widths truncated below at the floor.
inline std::vector<EmitterSource> random_line_ensemble(const LineEnsembleOptions& opt, std::uint64_t seed) {
  require(opt.count >= 0, "line count must be non-negative");
  require(opt.spread_ghz >= 0.0 && opt.fwhm_sd >= 0.0 && opt.fwhm_floor >= 0.0, "ensemble widths must be non-negative");
  require(opt.tau_us > 0.0, "lifetime must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5 * opt.spread_ghz, 0.5 * opt.spread_ghz);
  std::normal_distribution<double> w(opt.fwhm_mean, opt.fwhm_sd);
  std::vector<EmitterSource> out;
  for (int i = 0; i < opt.count; ++i) {
    EmitterSource e;
    e.emitter.detuning_ghz = u(rng);
    e.emitter.spectral_diffusion_fwhm_mhz = std::max(opt.fwhm_floor, w(rng));
    e.tau_us = opt.tau_us;
    e.p_z1 = opt.p_z1;
    out.push_back(e);
  }
  return out;
}

enum class EventOrigin : std::uint8_t { signal = 0, dark = 1 };

struct TimeTag {
  std::uint32_t pulse_index = 0;
  double time = 0.0;  // us after the pulse
  EventOrigin origin = EventOrigin::signal;

  bool operator==(const TimeTag&) const = default;
};

struct TimeTagStream {
  std::vector<TimeTag> events;
  PulseSequence sequence;
  double laser_detuning = 0.0;  // MHz
  bool filter_on = false;
  std::uint64_t seed = 0;
};

struct StreamOptions {
  double laser_detuning = 0.0;  // MHz
  double eta_exc_peak = -1.0;   // < 0: use chain.eta_exc
};

namespace detail {

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

// k distinct indices from [0, n), ascending.
inline std::vector<std::uint32_t> distinct_indices(std::uint32_t n, std::uint32_t k, std::mt19937_64& rng) {
  std::vector<std::uint32_t> out;
  if (k == 0) return out;
  if (2ull * k > n) {
    std::vector<std::uint32_t> all(n);
    for (std::uint32_t i = 0; i < n; ++i) all[i] = i;
    for (std::uint32_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::uint32_t> u(i, n - 1);
      std::swap(all[i], all[u(rng)]);
    }
    out.assign(all.begin(), all.begin() + k);
  } else {
    std::vector<char> used(n, 0);
    std::uniform_int_distribution<std::uint32_t> u(0, n - 1);
    while (out.size() < k) {
      const std::uint32_t i = u(rng);
      if (!used[i]) {
        used[i] = 1;
        out.push_back(i);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Probability that one pulse yields a detected photon from this emitter.
inline double detection_probability(const EmitterSource& src, const PulseSequence& seq, const EfficiencyChain& chain,
                                    const DetectorModel& det, bool filter_on, const StreamOptions& opt) {
  const double eta_peak = opt.eta_exc_peak >= 0.0 ? opt.eta_exc_peak : chain.eta_exc;
  const double d = src.emitter.detuning_ghz * 1e3 - opt.laser_detuning;
  const double exc = eta_peak * lorentzian_unit(d, src.emitter.spectral_diffusion_fwhm_mhz);
  const double in_window = src.tau_us > 0.0 ? 1.0 - std::exp(-seq.detection_window / src.tau_us) : 1.0;
  const double spectral = filter_on ? src.p_z1 * chain.eta_flt : 1.0;
  return std::clamp(exc * in_window * chain.transport() * spectral * det.quantum_efficiency, 0.0, 1.0);
}

// Expected-value excitation model: the spectral-diffusion average of a narrow
// excitation is the unit-peak Lorentzian of the diffusion FWHM. At most one
// photon per pulse per emitter; delays are exponential truncated to the window.
inline TimeTagStream simulate_stream(const std::vector<EmitterSource>& emitters, const PulseSequence& seq,
                                     const EfficiencyChain& chain, const DetectorModel& det, bool filter_on,
                                     std::uint64_t seed, const StreamOptions& opt = {}) {
  seq.validate();
  chain.validate();
  det.validate();
  TimeTagStream s;
  s.sequence = seq;
  s.laser_detuning = opt.laser_detuning;
  s.filter_on = filter_on;
  s.seed = seed;
  const auto reps = static_cast<std::uint32_t>(seq.repetitions);
  for (std::size_t e = 0; e < emitters.size(); ++e) {
    const auto& src = emitters[e];
    require(src.tau_us > 0.0, "emitter lifetime must be positive");
    require(src.p_z1 >= 0.0 && src.p_z1 <= 1.0, "emitter branching must lie in [0, 1]");
    src.emitter.validate();
    auto rng = detail::stream_rng(seed, 1, e);
    const double p = detection_probability(src, seq, chain, det, filter_on, opt);
    std::binomial_distribution<std::uint32_t> bin(reps, p);
    const std::uint32_t k = bin(rng);
    const auto pulses = detail::distinct_indices(reps, k, rng);
    // Inverse CDF of the exponential truncated to [0, W].
    const double trunc = 1.0 - std::exp(-seq.detection_window / src.tau_us);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::uint32_t pi : pulses) {
      const double t = -src.tau_us * std::log1p(-u(rng) * trunc);
      s.events.push_back({pi, std::min(t, seq.detection_window), EventOrigin::signal});
    }
  }
  if (det.dark_count_rate > 0.0) {
    auto rng = detail::stream_rng(seed, 2, 0);
    const double mean = det.dark_count_rate * seq.detection_window * 1e-6 * seq.repetitions;
    std::poisson_distribution<long> pois(mean);
    const long n = pois(rng);
    std::uniform_int_distribution<std::uint32_t> up(0, reps - 1);
    std::uniform_real_distribution<double> ut(0.0, seq.detection_window);
    for (long i = 0; i < n; ++i) {
      const std::uint32_t pi = up(rng);
      s.events.push_back({pi, ut(rng), EventOrigin::dark});
    }
  }
  std::sort(s.events.begin(), s.events.end(), [](const TimeTag& a, const TimeTag& b) {
    if (a.pulse_index != b.pulse_index) return a.pulse_index < b.pulse_index;
    if (a.time != b.time) return a.time < b.time;
    return a.origin < b.origin;
  });
  if (det.dead_time > 0.0) {
    const double dead_us = det.dead_time * 1e-3;
    std::vector<TimeTag> kept;
    kept.reserve(s.events.size());
    for (const auto& e : s.events) {
      if (!kept.empty() && kept.back().pulse_index == e.pulse_index && e.time - kept.back().time < dead_us) continue;
      kept.push_back(e);
    }
    s.events = std::move(kept);
  }
  return s;
}

struct FluorescenceSpectrum {
  std::vector<double> detuning;          // MHz
  std::vector<double> counts_per_pulse;
  double dark_floor = 0.0;               // counts per pulse

  void validate() const {
    require(detuning.size() == counts_per_pulse.size(), "spectrum columns differ in length");
    for (double c : counts_per_pulse) require(c >= 0.0, "negative counts in spectrum");
  }
};

inline double dark_floor(const PulseSequence& seq, const DetectorModel& det) {
  return det.dark_count_rate * seq.detection_window * 1e-6;
}

inline FluorescenceSpectrum scan_spectrum(const std::vector<EmitterSource>& emitters, const PulseSequence& seq,
                                          const EfficiencyChain& chain, const DetectorModel& det, std::uint64_t seed,
                                          bool filter_on = false, double eta_exc_peak = -1.0, int jobs = 1) {
  require(!seq.laser_detuning_grid.empty(), "laser detuning grid is empty");
  FluorescenceSpectrum out;
  out.detuning = seq.laser_detuning_grid;
  out.counts_per_pulse.assign(out.detuning.size(), 0.0);
  out.dark_floor = dark_floor(seq, det);
  parallel_for(out.detuning.size(), jobs, [&](std::size_t k) {
    StreamOptions opt;
    opt.laser_detuning = out.detuning[k];
    opt.eta_exc_peak = eta_exc_peak;
    auto st = simulate_stream(emitters, seq, chain, det, filter_on, seed + 7919ull * (k + 1), opt);
    out.counts_per_pulse[k] = static_cast<double>(st.events.size()) / seq.repetitions;
  });
  return out;
}

struct G2Histogram {
  std::vector<int> lags;
  std::vector<double> coincidences;
  std::vector<double> g2;
  double g2_zero = 0.0;
};

// Pulse-resolved autocorrelation: C(0) = sum n_p (n_p - 1), C(D) = sum n_p n_{p+D},
// normalized by the mean of C over 1 <= |D| <= max_lag.
inline G2Histogram g2_from_stream(const TimeTagStream& stream, int max_lag_pulses) {
  require(max_lag_pulses >= 1, "need at least one side lag");
  if (stream.events.size() < 2) throw InvalidArgument("g2 needs at least two events");
  std::unordered_map<std::uint32_t, double> counts;
  for (const auto& e : stream.events) counts[e.pulse_index] += 1.0;
  std::vector<std::pair<std::uint32_t, double>> occupied(counts.begin(), counts.end());
  std::sort(occupied.begin(), occupied.end());
  G2Histogram h;
  double side_sum = 0.0;
  for (int lag = -max_lag_pulses; lag <= max_lag_pulses; ++lag) {
    double c = 0.0;
    if (lag == 0) {
      for (const auto& [p, n] : occupied) c += n * (n - 1.0);
    } else {
      for (const auto& [p, n] : occupied) {
        const long q = static_cast<long>(p) + lag;
        if (q < 0) continue;
        auto it = counts.find(static_cast<std::uint32_t>(q));
        if (it != counts.end()) c += n * it->second;
      }
      side_sum += c;
    }
    h.lags.push_back(lag);
    h.coincidences.push_back(c);
  }
  const double norm = side_sum / (2.0 * max_lag_pulses);
  if (!(norm > 0.0)) throw InvalidArgument("no coincidences at non-zero lag; g2 undefined");
  for (double c : h.coincidences) h.g2.push_back(c / norm);
  h.g2_zero = h.g2[static_cast<std::size_t>(max_lag_pulses)];
  return h;
}

// Delay histogram of the signal+dark events over [0, window] with `bins` bins.
struct DelayHistogram {
  std::vector<double> t;  // bin centres [us]
  std::vector<double> counts;
  double bin_width = 0.0;
};

inline DelayHistogram delay_histogram(const TimeTagStream& s, int bins) {
  require(bins >= 1, "need at least one bin");
  DelayHistogram h;
  const double w = s.sequence.detection_window;
  h.bin_width = w / bins;
  h.counts.assign(bins, 0.0);
  for (int b = 0; b < bins; ++b) h.t.push_back((b + 0.5) * h.bin_width);
  for (const auto& e : s.events) h.counts[std::clamp(static_cast<int>(e.time / h.bin_width), 0, bins - 1)] += 1.0;
  return h;
}

// Binary layout (little-endian):
//   char[8] "ERPCWTTS", u32 version (1), u64 seed, u8 filter_on, f64 laser detuning,
//   f64 pulse_length, chirp_width, detection_window, rep_period, i32 repetitions,
//   u64 count, then per event: u32 pulse, f64 time, u8 origin.
inline constexpr std::array<char, 8> kStreamMagic = {'E', 'R', 'P', 'C', 'W', 'T', 'T', 'S'};
inline constexpr std::uint32_t kStreamVersion = 1;

inline void write_stream_binary(std::ostream& os, const TimeTagStream& s) {
  os.write(kStreamMagic.data(), kStreamMagic.size());
  detail::write_pod(os, kStreamVersion);
  detail::write_pod(os, s.seed);
  detail::write_pod(os, static_cast<std::uint8_t>(s.filter_on));
  detail::write_pod(os, s.laser_detuning);
  detail::write_pod(os, s.sequence.pulse_length);
  detail::write_pod(os, s.sequence.chirp_width);
  detail::write_pod(os, s.sequence.detection_window);
  detail::write_pod(os, s.sequence.rep_period);
  detail::write_pod(os, static_cast<std::int32_t>(s.sequence.repetitions));
  detail::write_pod(os, static_cast<std::uint64_t>(s.events.size()));
  for (const auto& e : s.events) {
    detail::write_pod(os, e.pulse_index);
    detail::write_pod(os, e.time);
    detail::write_pod(os, static_cast<std::uint8_t>(e.origin));
  }
}

inline TimeTagStream read_stream_binary(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kStreamMagic) throw InvalidArgument("not an erpcw time-tag file (bad magic)");
  const auto version = detail::read_pod<std::uint32_t>(is);
  if (version != kStreamVersion) throw InvalidArgument("unsupported time-tag file version " + std::to_string(version));
  TimeTagStream s;
  s.seed = detail::read_pod<std::uint64_t>(is);
  s.filter_on = detail::read_pod<std::uint8_t>(is) != 0;
  s.laser_detuning = detail::read_pod<double>(is);
  s.sequence.pulse_length = detail::read_pod<double>(is);
  s.sequence.chirp_width = detail::read_pod<double>(is);
  s.sequence.detection_window = detail::read_pod<double>(is);
  s.sequence.rep_period = detail::read_pod<double>(is);
  s.sequence.repetitions = detail::read_pod<std::int32_t>(is);
  const auto n = detail::read_pod<std::uint64_t>(is);
  if (n > (1ull << 34)) throw InvalidArgument("time-tag file declares an implausible event count");
  s.events.resize(n);
  for (auto& e : s.events) {
    e.pulse_index = detail::read_pod<std::uint32_t>(is);
    e.time = detail::read_pod<double>(is);
    const auto o = detail::read_pod<std::uint8_t>(is);
    if (o > 1) throw InvalidArgument("time-tag file has an unknown event origin");
    e.origin = static_cast<EventOrigin>(o);
  }
  return s;
}

inline void save_stream_binary(const std::string& path, const TimeTagStream& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  write_stream_binary(os, s);
}

inline TimeTagStream load_stream_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path);
  return read_stream_binary(is);
}

inline void write_stream_csv(std::ostream& os, const TimeTagStream& s) {
  os << "pulse_index,time_us,origin\n" << std::setprecision(17);
  for (const auto& e : s.events)
    os << e.pulse_index << ',' << e.time << ',' << (e.origin == EventOrigin::signal ? "signal" : "dark") << '\n';
}

inline void write_spectrum_csv(std::ostream& os, const FluorescenceSpectrum& s) {
  os << "detuning_MHz,counts_per_pulse\n" << std::setprecision(12);
  for (std::size_t k = 0; k < s.detuning.size(); ++k) os << s.detuning[k] << ',' << s.counts_per_pulse[k] << '\n';
}

inline void write_g2_csv(std::ostream& os, const G2Histogram& h) {
  os << "lag_pulses,coincidences,g2\n" << std::setprecision(12);
  for (std::size_t k = 0; k < h.lags.size(); ++k) os << h.lags[k] << ',' << h.coincidences[k] << ',' << h.g2[k] << '\n';
}

inline nlohmann::json to_json(const PulseSequence& s) {
  return {{"pulse_length_us", s.pulse_length},         {"chirp_width_MHz", s.chirp_width},
          {"repetitions", s.repetitions},              {"detection_window_us", s.detection_window},
          {"rep_period_us", s.rep_period},             {"laser_detuning_grid_MHz", s.laser_detuning_grid}};
}

inline nlohmann::json to_json(const EfficiencyChain& c) {
  nlohmann::json j;
  for (const auto& t : c.terms()) j[t.name] = {{"value", t.value}, {"sigma", t.sigma}};
  return j;
}

inline nlohmann::json to_json(const DetectorModel& d) {
  return {{"dark_count_rate_per_s", d.dark_count_rate},
          {"quantum_efficiency", d.quantum_efficiency},
          {"dead_time_ns", d.dead_time}};
}

}  // namespace erpcw
