#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "erpcw/analysis.hpp"
#include "oracles/comb.hpp"
#include "oracles/prominence.hpp"

using namespace erpcw;

TEST(Peaks, ProminenceMatchesLevelSetDefinition) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> len(3, 40), val(0, trial % 2 ? 4 : 1000);
    std::vector<double> x(len(rng));
    for (double& v : x) v = val(rng);
    const auto peaks = prominence_peaks(x);
    const auto ref = oracle::local_maxima(x);
    ASSERT_EQ(peaks.size(), ref.size()) << "trial " << trial;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      EXPECT_EQ(peaks[k].peak, ref[k]);
      EXPECT_DOUBLE_EQ(peaks[k].prominence, oracle::prominence(x, ref[k])) << "trial " << trial << " peak " << k;
      EXPECT_LE(peaks[k].left, peaks[k].peak);
      EXPECT_GE(peaks[k].right, peaks[k].peak);
    }
  }
}

TEST(Peaks, FindPeaksNormalizesAndThresholds) {
  FluorescenceSpectrum s;
  for (int k = 0; k < 200; ++k) {
    const double x = k;
    s.detuning.push_back(x);
    s.counts_per_pulse.push_back(0.01 + 0.5 / (1.0 + std::pow((x - 50) / 3, 2)) + 0.05 / (1.0 + std::pow((x - 150) / 3, 2)));
  }
  s.dark_floor = 0.01;
  EXPECT_EQ(find_peaks(s, 0.2).size(), 1u);
  EXPECT_EQ(find_peaks(s, 0.05).size(), 2u);
  FluorescenceSpectrum tiny;
  tiny.detuning = {0, 1, 2};
  tiny.counts_per_pulse = {0, 1, 0};
  EXPECT_THROW(find_peaks(tiny, 0.1), InvalidArgument);
}

TEST(Fits, LorentzianRecoversExactParameters) {
  std::vector<double> x, y;
  for (double f = -100.0; f <= 100.0; f += 2.0) {
    x.push_back(f);
    y.push_back(lorentzian_model(f, 7.3, 21.5, 0.04, 0.002));
  }
  const PeakFit p = fit_lorentzian(x, y);
  EXPECT_TRUE(p.converged);
  EXPECT_NEAR(p.center, 7.3, 1e-6);
  EXPECT_NEAR(p.fwhm, 21.5, 1e-6);
  EXPECT_NEAR(p.amplitude, 0.04, 1e-9);
  EXPECT_NEAR(p.offset, 0.002, 1e-9);
}

TEST(Fits, LorentzianModelShape) {
  EXPECT_DOUBLE_EQ(lorentzian_model(3.0, 3.0, 10.0, 2.0, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(lorentzian_model(8.0, 3.0, 10.0, 2.0, 0.0), 1.0);
}

TEST(Fits, ExponentialRecoversExactDecay) {
  std::vector<double> t, c;
  for (int i = 0; i < 60; ++i) {
    t.push_back(5.0 + 10.0 * i);
    c.push_back(800.0 * std::exp(-t.back() / 142.0) + 3.0);
  }
  const DecayFit f = fit_exponential(t, c);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.tau, 142.0, 1e-5);
  EXPECT_NEAR(f.amplitude, 800.0, 1e-4);
  EXPECT_NEAR(f.offset, 3.0, 1e-5);
  std::vector<double> pure(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) pure[i] = c[i] - 3.0;
  const DecayFit g = fit_exponential(t, pure, false);
  EXPECT_NEAR(g.tau, 142.0, 1e-5);
  EXPECT_DOUBLE_EQ(g.offset, 0.0);
}

TEST(Fits, ExponentialNeedsData) {
  EXPECT_THROW(fit_exponential({1, 2, 3, 4}, {5, 4, 3, 0}), InvalidArgument);
  EXPECT_THROW(fit_exponential({1, 2, 3}, {5, 4}), InvalidArgument);
}

TEST(G2, CorrectionInvertsBackgroundMixing) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double g_true = 0.5 * u(rng);
    const double S = 0.01 + u(rng), B = 0.5 * u(rng);
    const double rho = S / (S + B);
    const double raw = 1.0 - rho * rho + rho * rho * g_true;
    const G2Result r = correct_g2(raw, S, B);
    EXPECT_NEAR(r.g2_corrected, g_true, 1e-12);
    EXPECT_NEAR(r.rho, rho, 1e-15);
    EXPECT_FALSE(r.clamped);
  }
}

TEST(G2, ClampsAndRejects) {
  const G2Result r = correct_g2(0.1, 1.0, 1.0);
  EXPECT_TRUE(r.clamped);
  EXPECT_DOUBLE_EQ(r.g2_corrected, 0.0);
  EXPECT_THROW(correct_g2(0.3, 0.0, 0.0), InvalidArgument);
  EXPECT_THROW(correct_g2(0.3, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(correct_g2(-0.1, 1.0, 1.0), InvalidArgument);
  EXPECT_NEAR(correct_g2(0.5, 3.0, 1.0, 0.04).s_g2_corrected, 0.04 / 0.5625, 1e-15);
}

TEST(G2, ZeroLagSigma) {
  G2Histogram h;
  h.lags = {-1, 0, 1};
  h.coincidences = {100.0, 25.0, 100.0};
  h.g2 = {1.0, 0.25, 1.0};
  h.g2_zero = 0.25;
  EXPECT_DOUBLE_EQ(g2_zero_sigma(h), 0.05);
}

TEST(GroupIndexFsr, UniformSpacing) {
  const std::vector<double> f = {100.0, 100.15, 100.30, 100.45};
  const GroupIndexCurve g = ng_from_fsr(f, 10.0, 3e8);
  ASSERT_EQ(g.ng.size(), 3u);
  for (double v : g.ng) EXPECT_NEAR(v, 100.0, 1e-6);
  EXPECT_NEAR(g.nu[0], 100.075, 1e-12);
}

TEST(GroupIndexFsr, BadInputThrows) {
  EXPECT_THROW(ng_from_fsr({100.0, 100.0, 100.2}, 10.0), InvalidArgument);
  EXPECT_THROW(ng_from_fsr({100.2, 100.0}, 10.0), InvalidArgument);
  EXPECT_THROW(ng_from_fsr({100.0}, 10.0), InvalidArgument);
  EXPECT_THROW(ng_from_fsr({100.0, 100.1}, 0.0), InvalidArgument);
}

TEST(GroupIndexFsr, ReciprocalCombMatchesQuadrature) {
  const double A = 5.0, nu_e = 190.0;
  const auto fast = reciprocal_comb(A, nu_e, 190.2, 12, 100.0);
  const auto ref = oracle::dispersive_comb([&](double nu) { return A / (nu - nu_e); }, 190.2, 12, 100.0);
  for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(fast[k], ref[k], 1e-8);
}

TEST(GroupIndexFsr, ReciprocalFitRecoversParameters) {
  const double A = 5.0, nu_e = 190.0;
  const auto comb = oracle::dispersive_comb([&](double nu) { return A / (nu - nu_e); }, 190.2, 15, 400.0);
  const ReciprocalFit f = fit_reciprocal(ng_from_fsr(comb, 400.0));
  EXPECT_TRUE(f.converged);
  // Midpoint sampling of a convex curve biases the recovered edge by a small fraction of the spacing.
  EXPECT_NEAR(f.A / A, 1.0, 0.02);
  EXPECT_NEAR(f.nu_e, nu_e, 0.01);
  EXPECT_DOUBLE_EQ(f(191.0), f.A / (191.0 - f.nu_e));
}

TEST(GroupIndexFsr, FlatCurveDoesNotConverge) {
  GroupIndexCurve g;
  g.nu = {190.0, 191.0, 192.0, 193.0};
  g.ng = {5.0, 5.0, 5.0, 5.0};
  EXPECT_FALSE(fit_reciprocal(g).converged);
}

TEST(Branching, RatioAndUncertainty) {
  const BranchingEstimate b = branching_from_filter(0.1, 1.0, 0.5, 0.01, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(b.value, 0.2);
  EXPECT_NEAR(b.sigma, 0.02, 1e-15);
  EXPECT_FALSE(b.above_one);
  EXPECT_TRUE(branching_from_filter(0.6, 1.0, 0.5).above_one);
  EXPECT_THROW(branching_from_filter(0.1, 0.0, 0.5), InvalidArgument);
  EXPECT_THROW(branching_from_filter(0.1, 1.0, 1.5), InvalidArgument);
}

TEST(Branching, FilteringHypothesis) {
  const HypothesisReport h = filtering_hypothesis_test(EfficiencyChain{}, 0.0341, 0.0023);
  const ChainResult c = chain_probability(EfficiencyChain{});
  EXPECT_NEAR(h.excess_sigma, (0.0341 - c.P) / std::hypot(c.sigma, 0.0023), 1e-12);
  EXPECT_TRUE(h.rejected);
  EXPECT_FALSE(filtering_hypothesis_test(EfficiencyChain{}, 0.02, 0.0023).rejected);
}

TEST(SpectrumIo, CsvRoundTrip) {
  FluorescenceSpectrum s;
  s.detuning = {-4.0, 0.0, 4.0};
  s.counts_per_pulse = {0.001, 0.02, 0.003};
  std::stringstream ss;
  write_spectrum_csv(ss, s);
  const FluorescenceSpectrum r = read_spectrum_csv(ss);
  EXPECT_EQ(r.detuning, s.detuning);
  EXPECT_EQ(r.counts_per_pulse, s.counts_per_pulse);
  std::stringstream bad("detuning,counts\n1,2\n3,x\n");
  EXPECT_THROW(read_spectrum_csv(bad), InvalidArgument);
  std::stringstream neg("1,-2\n");
  EXPECT_THROW(read_spectrum_csv(neg), InvalidArgument);
}
