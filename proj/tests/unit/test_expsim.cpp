#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "erpcw/expsim.hpp"
#include "oracles/rabi.hpp"

using namespace erpcw;

namespace {

EmitterSource single_emitter(double fwhm_mhz = 21.5, double tau_us = 295.0) {
  EmitterSource e;
  e.emitter.spectral_diffusion_fwhm_mhz = fwhm_mhz;
  e.tau_us = tau_us;
  return e;
}

PulseSequence sequence(int reps) {
  PulseSequence s;
  s.repetitions = reps;
  return s;
}

// Mean of an exponential with time constant tau truncated to [0, w].
double truncated_mean(double tau, double w) {
  const double e = std::exp(-w / tau);
  return tau - w * e / (1.0 - e);
}

}  // namespace

TEST(Efficiency, ChainReproducesProductAndUncertainty) {
  const EfficiencyChain c;
  const ChainResult r = chain_probability(c);
  const double p = 0.50 * 0.23 * 1.0 * 0.92 * 0.73 * 0.90 * 0.95 * 0.78 * 0.476 * 0.75;
  EXPECT_NEAR(r.P, p, 1e-15);
  // Relative errors add in quadrature for a product of independent factors.
  double rel = 0.0;
  for (const auto& t : c.terms())
    if (t.value > 0.0) rel += std::pow(t.sigma / t.value, 2);
  EXPECT_NEAR(r.sigma, p * std::sqrt(rel), 1e-15);
  EXPECT_NEAR(100.0 * r.P, 1.84, 0.005);
  EXPECT_NEAR(100.0 * r.sigma, 0.43, 0.01);
}

TEST(Efficiency, OutOfRangeTermThrows) {
  EfficiencyChain c;
  c.eta_sc = 1.2;
  EXPECT_THROW(chain_probability(c), InvalidArgument);
  c = EfficiencyChain{};
  c.s_eta_bs = -0.1;
  EXPECT_THROW(chain_probability(c), InvalidArgument);
}

TEST(Sequence, WindowMustFitPeriod) {
  PulseSequence s;
  s.detection_window = 699.0;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = PulseSequence{};
  s.repetitions = 0;
  EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(Excitation, CoherentUnchirpedPulseMatchesRabiFormula) {
  PulseSequence s;
  s.chirp_width = 0.0;
  s.pulse_length = 2.0;
  for (double det : {0.0, 0.2, 0.6}) {
    const double p = excitation_probability(0.25, s, 0.0, DephasingMode::slow, {}, det);
    EXPECT_NEAR(p, oracle::rabi_population(0.25, det, 2.0), 1e-4) << "detuning " << det;
  }
}

TEST(Excitation, ZeroDriveAndArgumentChecks) {
  const PulseSequence s;
  EXPECT_DOUBLE_EQ(excitation_probability(0.0, s, 20.0, DephasingMode::fast), 0.0);
  EXPECT_THROW(excitation_probability(-1.0, s, 20.0, DephasingMode::fast), InvalidArgument);
  EXPECT_THROW(excitation_probability(1.0, s, -2.0, DephasingMode::fast), InvalidArgument);
}

TEST(Excitation, FastDephasingSaturatesBelowHalf) {
  const PulseSequence s;
  double prev = 0.0;
  for (double r : {0.5, 2.0, 8.0, 30.0}) {
    const double p = excitation_probability(r, s, 21.5, DephasingMode::fast);
    EXPECT_GT(p, prev);
    EXPECT_LE(p, 0.5 + 1e-9);
    prev = p;
  }
}

TEST(Excitation, RabiSearchHitsTarget) {
  const PulseSequence s;
  const RabiSearch r = find_rabi_frequency(0.3, 0.01, 30.0, s, 21.5, DephasingMode::fast);
  EXPECT_TRUE(r.bracketed);
  EXPECT_NEAR(r.eta, 0.3, 1e-6);
  EXPECT_NEAR(excitation_probability(r.rabi_mhz, s, 21.5, DephasingMode::fast), 0.3, 1e-6);
  const RabiSearch none = find_rabi_frequency(0.9, 0.01, 30.0, s, 21.5, DephasingMode::fast);
  EXPECT_FALSE(none.bracketed);
}

TEST(Stream, DeterministicForSeed) {
  const auto seq = sequence(20000);
  const EfficiencyChain c;
  const DetectorModel d;
  const auto a = simulate_stream({single_emitter()}, seq, c, d, false, 42);
  const auto b = simulate_stream({single_emitter()}, seq, c, d, false, 42);
  const auto other = simulate_stream({single_emitter()}, seq, c, d, false, 43);
  EXPECT_EQ(a.events, b.events);
  EXPECT_NE(a.events, other.events);
}

TEST(Stream, SignalCountAndDelays) {
  const auto seq = sequence(200000);
  const EfficiencyChain c;
  DetectorModel d;
  d.dark_count_rate = 0.0;
  const EmitterSource e = single_emitter();
  const double p = detection_probability(e, seq, c, d, false, {});
  const auto st = simulate_stream({e}, seq, c, d, false, 5);
  const double mean = p * seq.repetitions;
  EXPECT_NEAR(static_cast<double>(st.events.size()), mean, 5.0 * std::sqrt(mean));
  double t = 0.0;
  for (const auto& ev : st.events) {
    EXPECT_EQ(ev.origin, EventOrigin::signal);
    EXPECT_GE(ev.time, 0.0);
    EXPECT_LE(ev.time, seq.detection_window);
    t += ev.time;
  }
  const double tm = truncated_mean(e.tau_us, seq.detection_window);
  EXPECT_NEAR(t / st.events.size() / tm, 1.0, 0.03);
}

TEST(Stream, DetectionProbabilityFactors) {
  const PulseSequence seq;
  const EfficiencyChain c;
  const DetectorModel d;
  EmitterSource e = single_emitter(20.0, 300.0);
  const double on = detection_probability(e, seq, c, d, false, {});
  const double expected = c.eta_exc * (1.0 - std::exp(-600.0 / 300.0)) * c.transport() * d.quantum_efficiency;
  EXPECT_NEAR(on, expected, 1e-14);
  EXPECT_NEAR(detection_probability(e, seq, c, d, true, {}) / on, e.p_z1 * c.eta_flt, 1e-12);
  StreamOptions half;
  half.laser_detuning = 10.0;
  EXPECT_NEAR(detection_probability(e, seq, c, d, false, half) / on, 0.5, 1e-12);
}

TEST(Stream, DarkCountsArePoissonAndUniform) {
  const auto seq = sequence(10000);
  DetectorModel d;
  d.dark_count_rate = 1e4;
  const auto st = simulate_stream({}, seq, EfficiencyChain{}, d, false, 11);
  const double mean = dark_floor(seq, d) * seq.repetitions;
  EXPECT_NEAR(dark_floor(seq, d), 6.0, 1e-12);
  EXPECT_NEAR(static_cast<double>(st.events.size()), mean, 5.0 * std::sqrt(mean));
  double t = 0.0;
  for (const auto& ev : st.events) {
    EXPECT_EQ(ev.origin, EventOrigin::dark);
    t += ev.time;
  }
  EXPECT_NEAR(t / st.events.size(), 300.0, 5.0);
}

TEST(Stream, DeadTimeKeepsOneEventPerPulse) {
  const auto seq = sequence(2000);
  DetectorModel d;
  d.dark_count_rate = 2e4;
  d.dead_time = 1e9;
  const auto st = simulate_stream({single_emitter()}, seq, EfficiencyChain{}, d, false, 3);
  std::set<std::uint32_t> pulses;
  for (const auto& ev : st.events) EXPECT_TRUE(pulses.insert(ev.pulse_index).second);
}

TEST(Stream, SingleEmitterHasNoZeroDelayCoincidences) {
  auto seq = sequence(100000);
  DetectorModel d;
  d.dark_count_rate = 0.0;
  EfficiencyChain c;
  c.eta_sc = c.eta_ftc = c.eta_ft = c.eta_bs = c.eta_os = 1.0;
  const auto st = simulate_stream({single_emitter(0.0)}, seq, c, d, false, 17);
  const G2Histogram h = g2_from_stream(st, 20);
  EXPECT_DOUBLE_EQ(h.g2_zero, 0.0);
  ASSERT_EQ(h.g2.size(), 41u);
  double side = 0.0;
  for (std::size_t k = 0; k < h.g2.size(); ++k)
    if (h.lags[k] != 0) side += h.g2[k];
  EXPECT_NEAR(side / 40.0, 1.0, 1e-12);
}

TEST(Stream, TwoEqualEmittersGiveHalf) {
  auto seq = sequence(200000);
  DetectorModel d;
  d.dark_count_rate = 0.0;
  EfficiencyChain c;
  c.eta_sc = c.eta_ftc = c.eta_ft = c.eta_bs = c.eta_os = 1.0;
  const auto st = simulate_stream({single_emitter(0.0), single_emitter(0.0)}, seq, c, d, false, 23);
  EXPECT_NEAR(g2_from_stream(st, 50).g2_zero, 0.5, 0.05);
}

TEST(Stream, G2NeedsEvents) {
  TimeTagStream s;
  EXPECT_THROW(g2_from_stream(s, 5), InvalidArgument);
  s.events = {{0, 1.0, EventOrigin::signal}, {0, 2.0, EventOrigin::signal}};
  EXPECT_THROW(g2_from_stream(s, 5), InvalidArgument);
}

TEST(Stream, BinaryRoundTrip) {
  auto seq = sequence(5000);
  seq.chirp_width = 7.5;
  StreamOptions o;
  o.laser_detuning = -12.0;
  const auto st = simulate_stream({single_emitter()}, seq, EfficiencyChain{}, DetectorModel{}, true, 99, o);
  std::stringstream ss;
  write_stream_binary(ss, st);
  const auto back = read_stream_binary(ss);
  EXPECT_EQ(back.events, st.events);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_TRUE(back.filter_on);
  EXPECT_DOUBLE_EQ(back.laser_detuning, -12.0);
  EXPECT_DOUBLE_EQ(back.sequence.chirp_width, 7.5);
  EXPECT_EQ(back.sequence.repetitions, 5000);
}

TEST(Stream, CorruptBinaryThrows) {
  std::stringstream bad("XXXXXXXX1234");
  EXPECT_THROW(read_stream_binary(bad), InvalidArgument);
  const auto st = simulate_stream({single_emitter()}, sequence(1000), EfficiencyChain{}, DetectorModel{}, false, 1);
  std::stringstream ss;
  write_stream_binary(ss, st);
  std::string bytes = ss.str();
  bytes.resize(bytes.size() - 3);
  std::stringstream cut(bytes);
  EXPECT_ANY_THROW(read_stream_binary(cut));
}

TEST(Stream, DelayHistogramCountsEverything) {
  const auto st = simulate_stream({single_emitter()}, sequence(50000), EfficiencyChain{}, DetectorModel{}, false, 8);
  const DelayHistogram h = delay_histogram(st, 60);
  ASSERT_EQ(h.counts.size(), 60u);
  double total = 0.0;
  for (double c : h.counts) total += c;
  EXPECT_DOUBLE_EQ(total, static_cast<double>(st.events.size()));
  EXPECT_DOUBLE_EQ(h.bin_width, 10.0);
  EXPECT_DOUBLE_EQ(h.t.front(), 5.0);
}

TEST(Spectrum, ScanPeaksAtEmitterDetuning) {
  EmitterSource e = single_emitter(30.0);
  e.emitter.detuning_ghz = 0.04;
  PulseSequence seq = sequence(20000);
  for (double f = -60.0; f <= 140.0; f += 4.0) seq.laser_detuning_grid.push_back(f);
  const auto sp = scan_spectrum({e}, seq, EfficiencyChain{}, DetectorModel{}, 4);
  const auto it = std::max_element(sp.counts_per_pulse.begin(), sp.counts_per_pulse.end());
  EXPECT_NEAR(sp.detuning[it - sp.counts_per_pulse.begin()], 40.0, 12.0);
  EXPECT_NEAR(sp.dark_floor, 6e-3, 1e-12);
  PulseSequence empty;
  EXPECT_THROW(scan_spectrum({e}, empty, EfficiencyChain{}, DetectorModel{}, 4), InvalidArgument);
}

TEST(Spectrum, RandomLineEnsemble) {
  const LineEnsembleOptions o;
  const auto a = random_line_ensemble(o, 7);
  ASSERT_EQ(a.size(), 30u);
  for (const auto& e : a) {
    EXPECT_LE(std::abs(e.emitter.detuning_ghz), 6.0);
    EXPECT_GE(e.emitter.spectral_diffusion_fwhm_mhz, 13.0);
    EXPECT_DOUBLE_EQ(e.tau_us, 295.0);
  }
  const auto b = random_line_ensemble(o, 7);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_DOUBLE_EQ(a[k].emitter.detuning_ghz, b[k].emitter.detuning_ghz);
}
