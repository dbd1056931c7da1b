#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "erpcw/emitter.hpp"

using namespace erpcw;

namespace {

const TransitionRates& paper_rates() {
  static const TransitionRates r = rates_from_bulk(142.0, default_branching());
  return r;
}

PurcellVector enhanced(double f1, double rest) {
  PurcellVector f = PurcellVector::uniform(rest);
  f.F[0] = f1;
  return f;
}

// Gaussian guided-mode stand-in: Ey only, on a uniform slab, 1 period long.
ModeProfile gaussian_profile(double waist_nm) {
  ModeProfile p;
  p.eps = EpsilonMap(20, 60, 21.0, 21.0, -210.0, -630.0, 8.12);
  p.ex.assign(p.eps.size(), 0.0);
  p.ey.assign(p.eps.size(), 0.0);
  for (int j = 0; j < p.eps.ny(); ++j)
    for (int i = 0; i < p.eps.nx(); ++i) {
      const double y = p.eps.y_center(j);
      p.ey[static_cast<std::size_t>(j) * p.eps.nx() + i] = std::exp(-y * y / (waist_nm * waist_nm));
    }
  p.finalize();
  return p;
}

GroupIndexCurve reciprocal_ng(double A, double nu_e, double lo, double hi, int n) {
  GroupIndexCurve g;
  for (int k = 0; k < n; ++k) {
    const double nu = lo + (hi - lo) * k / (n - 1);
    g.nu.push_back(nu);
    g.ng.push_back(A / (nu - nu_e));
  }
  return g;
}

}  // namespace

TEST(Emitter, DefaultLevelScheme) {
  const LevelScheme s = default_level_scheme();
  EXPECT_NO_THROW(s.validate());
  EXPECT_NEAR(s.y1_frequency, 194.9, 0.1);
  EXPECT_EQ(s.z_offsets[0], 0.0);
  for (int i = 1; i < kLevels; ++i) {
    const double lambda = thz_to_nm(s.transition_frequency(i));
    EXPECT_GE(lambda, 1550.0 - 1e-9);
    EXPECT_LE(lambda, 1650.0 + 1e-9);
  }
  EXPECT_EQ(LevelScheme::label(7), "Z8");
}

TEST(Emitter, BranchingValidation) {
  BranchingTable b = default_branching();
  EXPECT_NO_THROW(b.validate());
  EXPECT_DOUBLE_EQ(b.p[0], 0.23);
  EXPECT_NEAR(b.p[3], 0.11, 1e-12);
  b.p[0] = 0.5;
  EXPECT_THROW(b.validate(), InvalidArgument);
  EXPECT_THROW(rates_from_bulk(142.0, b), InvalidArgument);
}

TEST(Emitter, RatesFromBulk) {
  const TransitionRates& r = paper_rates();
  EXPECT_NEAR(r.A_total, 7042.25, 0.01);
  EXPECT_NEAR(r.A[0], 1619.7, 0.1);
  EXPECT_NEAR(std::accumulate(r.A.begin(), r.A.end(), 0.0) / r.A_total, 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.tau_bulk, 142.0);
  EXPECT_THROW(rates_from_bulk(0.0, default_branching()), InvalidArgument);
}

TEST(Emitter, SingleChannelAndUniformBranching) {
  BranchingTable one{};
  one.p[0] = 1.0;
  const TransitionRates r1 = rates_from_bulk(142.0, one);
  EXPECT_DOUBLE_EQ(r1.A[0], r1.A_total);
  BranchingTable flat{};
  flat.p.fill(1.0 / kLevels);
  const TransitionRates r8 = rates_from_bulk(142.0, flat);
  for (double a : r8.A) EXPECT_NEAR(a, r8.A_total / kLevels, 1e-9);
}

TEST(Emitter, BulkFixedPoint) {
  const PurcellVector one = PurcellVector::uniform(1.0);
  EXPECT_NEAR(modified_lifetime(paper_rates(), one), 142.0, 1e-9);
  const BranchingTable p = modified_branching(paper_rates(), one);
  for (int i = 0; i < kLevels; ++i) EXPECT_NEAR(p.p[i], default_branching().p[i], 1e-12);
}

TEST(Emitter, OnlyZ1Channel) {
  EXPECT_NEAR(modified_lifetime(paper_rates(), enhanced(1.0, 0.0)), 142.0 / 0.23, 1e-6);
  EXPECT_NEAR(modified_branching(paper_rates(), enhanced(3.0, 0.0)).p[0], 1.0, 1e-15);
}

TEST(Emitter, EnhancementBalancesInhibition) {
  // F1 * 0.23 + 0.1 * 0.77 = 1, solved directly.
  const double f1 = (1.0 - 0.1 * 0.77) / 0.23;
  EXPECT_NEAR(f1, 4.013, 5e-4);
  const PurcellVector f = enhanced(4.013, 0.1);
  EXPECT_NEAR(modified_lifetime(paper_rates(), f), 142.0, 0.01);
  EXPECT_NEAR(modified_branching(paper_rates(), f).p[0], 0.923, 1e-3);
}

TEST(Emitter, NormalizationAndConsistency) {
  for (const PurcellVector& f : {enhanced(4.013, 0.1), enhanced(0.2, 0.7), PurcellVector::uniform(2.5)}) {
    const BranchingTable b = modified_branching(paper_rates(), f);
    EXPECT_NEAR(std::accumulate(b.p.begin(), b.p.end(), 0.0), 1.0, 1e-12);
    double s = 0.0;
    for (int i = 0; i < kLevels; ++i) s += f.F[i] * paper_rates().A[i];
    EXPECT_NEAR(modified_lifetime(paper_rates(), f) * 1e-6 * s, 1.0, 1e-12);
  }
}

TEST(Emitter, MonotoneInEachFactor) {
  const PurcellVector base = enhanced(2.0, 0.3);
  const double tau0 = modified_lifetime(paper_rates(), base);
  const BranchingTable p0 = modified_branching(paper_rates(), base);
  for (int i = 0; i < kLevels; ++i) {
    PurcellVector up = base;
    up.F[i] *= 1.5;
    EXPECT_LE(modified_lifetime(paper_rates(), up), tau0);
    EXPECT_GE(modified_branching(paper_rates(), up).p[i], p0.p[i]);
  }
}

TEST(Emitter, NoDecayChannelThrows) {
  EXPECT_THROW(modified_lifetime(paper_rates(), PurcellVector::uniform(0.0)), InvalidArgument);
  EXPECT_THROW(modified_branching(paper_rates(), PurcellVector::uniform(0.0)), InvalidArgument);
  EXPECT_THROW(modified_lifetime(paper_rates(), PurcellVector::uniform(-1.0)), InvalidArgument);
}

TEST(Emitter, PurcellMaxFormula) {
  EXPECT_NEAR(purcell_max(3.45, 3.45), 9.0 / (4.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(purcell_max(140.0, 3.45), 9.0 * 140.0 / (4.0 * std::numbers::pi * 3.45), 1e-9);
  EXPECT_NEAR(purcell_max(140.0, 3.45), 29.06, 0.01);
  EXPECT_DOUBLE_EQ(purcell_max(80.0, 3.45), 2.0 * purcell_max(40.0, 3.45));
  const double veff = 420.0 * std::pow(1538.0 / 3.45, 2) / 3.0;
  EXPECT_NEAR(purcell_max_veff(50.0, 3.45, 1538.0, 420.0, veff), purcell_max(50.0, 3.45), 1e-12);
  EXPECT_NEAR(purcell_max_veff(50.0, 3.45, 1538.0, 420.0, 2.0 * veff), 0.5 * purcell_max(50.0, 3.45), 1e-12);
  EXPECT_THROW(purcell_max(0.0, 3.45), InvalidArgument);
}

TEST(Emitter, PurcellAtFieldMaximum) {
  const ModeProfile p = gaussian_profile(150.0);
  EmitterInstance e;
  e.x = 5.0;
  e.y = 10.0;  // the pixel adjacent to y = 0 carries the maximum
  e.dipole = {0.0, 1.0, 0.0};
  EXPECT_NEAR(purcell_at(e, p, 12.0), 12.0, 1e-12);
  e.dipole = {1.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(purcell_at(e, p, 12.0), 0.0);
  e.dipole = {0.0, 0.0, 1.0};
  EXPECT_DOUBLE_EQ(purcell_at(e, p, 12.0), 0.0);
  e.dipole = {0.0, std::sqrt(0.5), std::sqrt(0.5)};
  EXPECT_NEAR(purcell_at(e, p, 12.0), 6.0, 1e-12);
  e.y = 5000.0;
  EXPECT_THROW(purcell_at(e, p, 12.0), InvalidArgument);
  e.y = 0.0;
  e.dipole = {0.0, 2.0, 0.0};
  EXPECT_THROW(purcell_at(e, p, 12.0), InvalidArgument);
}

TEST(Emitter, InhibitionFromSpectra) {
  const LevelScheme s = default_level_scheme();
  LdosSpectrum flat;
  for (int k = 0; k <= 100; ++k) {
    flat.nu.push_back(175.0 + 0.25 * k);
    flat.rho_rel.push_back(1.0);
  }
  const PurcellVector v = inhibition_vector({flat}, s);
  for (double f : v.F) EXPECT_DOUBLE_EQ(f, 1.0);
  LdosSpectrum low = flat;
  for (double& r : low.rho_rel) r = 0.05;
  const PurcellVector avg = inhibition_vector({flat, low}, s);
  for (int i = 1; i < kLevels; ++i) EXPECT_NEAR(avg.F[i], 0.525, 1e-12);
  LdosSpectrum narrow;
  narrow.nu = {185.0, 186.0};
  narrow.rho_rel = {1.0, 1.0};
  try {
    inhibition_vector({narrow}, s);
    FAIL() << "expected an out-of-range error";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("Z"), std::string::npos);
  }
}

TEST(Zeeman, NoZ1ChannelGivesConstantLifetime) {
  const GroupIndexCurve g = reciprocal_ng(17.0, 194.70, 194.8, 195.2, 41);
  const PurcellVector inh = PurcellVector::uniform(0.1);
  const auto curve = zeeman_lifetime_curve(g, paper_rates(), inh, 0.0, {194.85, 195.0, 195.15});
  double rest = 0.0;
  for (int i = 1; i < kLevels; ++i) rest += inh.F[i] * paper_rates().A[i];
  for (const auto& p : curve) EXPECT_NEAR(p.tau_us, 1e6 / rest, 1e-9);
}

TEST(Zeeman, ReciprocalGroupIndexGivesNearlyLinearLifetime) {
  const GroupIndexCurve g = reciprocal_ng(17.0, 194.70, 194.75, 195.25, 201);
  std::vector<double> nu;
  for (int k = 0; k <= 40; ++k) nu.push_back(194.9 + 0.2 * k / 40.0);  // +-100 GHz about 195.0 THz
  const auto curve = zeeman_lifetime_curve(g, paper_rates(), PurcellVector::uniform(0.1), kSpatialFactor, nu);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(curve.size());
  for (const auto& p : curve) {
    sx += p.nu;
    sy += p.tau_us;
    sxx += p.nu * p.nu;
    sxy += p.nu * p.tau_us;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  double worst = 0.0;
  for (const auto& p : curve) worst = std::max(worst, std::abs(icpt + slope * p.nu - p.tau_us) / p.tau_us);
  EXPECT_LT(worst, 0.02);
  // n_g falls with nu above the edge, so the lifetime rises.
  for (std::size_t k = 1; k < curve.size(); ++k) EXPECT_GT(curve[k].tau_us, curve[k - 1].tau_us);
}

TEST(Zeeman, LargerSpatialFactorShortensLifetime) {
  const GroupIndexCurve g = reciprocal_ng(17.0, 194.70, 194.8, 195.2, 41);
  const auto a = zeeman_lifetime_curve(g, paper_rates(), PurcellVector::uniform(0.1), 0.2, {195.0});
  const auto b = zeeman_lifetime_curve(g, paper_rates(), PurcellVector::uniform(0.1), 0.4, {195.0});
  EXPECT_LT(b[0].tau_us, a[0].tau_us);
}

TEST(Zeeman, OutOfRangeThrows) {
  const GroupIndexCurve g = reciprocal_ng(17.0, 194.70, 194.8, 195.2, 41);
  EXPECT_THROW(zeeman_lifetime_curve(g, paper_rates(), PurcellVector::uniform(0.1), 0.2, {196.0}), InvalidArgument);
}

TEST(Zeeman, FieldSweepFrequencies) {
  const ZeemanModel z;
  EXPECT_TRUE(z.placeholder);
  const auto f = z.frequencies(195.0, 4);
  ASSERT_EQ(f.size(), 7u);
  EXPECT_NEAR(f.front(), 195.0 - 0.099, 1e-12);
  EXPECT_NEAR(f.back(), 195.0 + 0.099, 1e-12);
  ZeemanModel bad;
  bad.field_max_t = 4.0;
  EXPECT_THROW(bad.frequencies(195.0, 4), InvalidArgument);
}

TEST(Ensemble, DeterministicAndSchedulingIndependent) {
  const ModeProfile p = gaussian_profile(150.0);
  EnsembleOptions o;
  const EnsembleResult a = sample_ensemble(500, p, 3.0, PurcellVector::uniform(0.3), paper_rates(), 11, o);
  o.jobs = 3;
  const EnsembleResult b = sample_ensemble(500, p, 3.0, PurcellVector::uniform(0.3), paper_rates(), 11, o);
  ASSERT_EQ(a.members.size(), b.members.size());
  for (std::size_t i = 0; i < a.members.size(); ++i) EXPECT_DOUBLE_EQ(a.members[i].tau_us, b.members[i].tau_us);
  const EnsembleResult c = sample_ensemble(500, p, 3.0, PurcellVector::uniform(0.3), paper_rates(), 12, o);
  EXPECT_NE(a.tau.mean, c.tau.mean);
}

TEST(Ensemble, SingleMemberMatchesDirectModel) {
  const ModeProfile p = gaussian_profile(150.0);
  const EnsembleResult r = sample_ensemble(1, p, 4.0, PurcellVector::uniform(0.2), paper_rates(), 5);
  const auto& m = r.members.front();
  PurcellVector f = PurcellVector::uniform(0.2);
  f.F[0] = purcell_at(m.emitter, p, 4.0);
  EXPECT_DOUBLE_EQ(m.tau_us, modified_lifetime(paper_rates(), f));
  EXPECT_DOUBLE_EQ(m.p_z1, modified_branching(paper_rates(), f).p[0]);
}

TEST(Ensemble, IsotropicOrientations) {
  const ModeProfile p = gaussian_profile(150.0);
  const EnsembleResult r = sample_ensemble(20000, p, 1.0, PurcellVector::uniform(1.0), paper_rates(), 3);
  double zz = 0.0;
  for (const auto& m : r.members) {
    EXPECT_NEAR(m.emitter.dipole.norm(), 1.0, 1e-12);
    zz += m.emitter.dipole.z * m.emitter.dipole.z;
  }
  EXPECT_NEAR(zz / r.members.size(), 1.0 / 3.0, 0.01);
}

TEST(Ensemble, CalibratedMeanAndStatistics) {
  const ModeProfile p = gaussian_profile(150.0);
  EnsembleOptions o;
  o.target_spatial_factor = kSpatialFactor;
  o.region_half_height = 150.0;
  const double f_max = 2.0;
  const PurcellVector inh = PurcellVector::uniform(0.3);
  const EnsembleResult r = sample_ensemble(10000, p, f_max, inh, paper_rates(), 21, o);
  double mean_c = 0.0;
  int above = 0;
  for (const auto& m : r.members) {
    mean_c += m.coupling;
    if (m.tau_us > 142.0) ++above;
  }
  EXPECT_NEAR(mean_c / r.members.size(), kSpatialFactor, 1e-12);
  const double closed = mean_rate_lifetime(paper_rates(), f_max, kSpatialFactor, inh);
  EXPECT_NEAR(r.tau.mean / closed, 1.0, 0.15);
  EXPECT_GE(above, 9000);
  std::size_t total = 0;
  for (auto c : r.tau_histogram.counts) total += c;
  EXPECT_EQ(total, r.members.size());
}

TEST(Ensemble, EmptyEnsembleThrows) {
  EXPECT_THROW(sample_ensemble(0, gaussian_profile(150.0), 1.0, PurcellVector::uniform(1.0), paper_rates(), 1),
               InvalidArgument);
}
