#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "erpcw/bands.hpp"
#include "erpcw/workflows.hpp"
#include "oracles/free_photon.hpp"
#include "oracles/transfer_matrix.hpp"

using namespace erpcw;

namespace {

constexpr double kC = 299792458.0;

// Stripes along x: layer of index n1 over the first fill * a, n2 elsewhere.
EpsilonMap stripe_cell(double a, double n1, double n2, double fill, int nx) {
  EpsilonMap m(nx, 1, a / nx, a / 20.0, 0.0, 0.0, n2 * n2);
  const int n_in = static_cast<int>(std::lround(fill * nx));
  for (int i = 0; i < n_in; ++i) m(i, 0) = n1 * n1;
  return m;
}

}  // namespace

TEST(Bands, HomogeneousMediumDispersion) {
  const double n = 2.0;
  EpsilonMap cell(32, 56, 420.0 / 32, 420.0 * std::sqrt(3.0) / 56, 0.0, 0.0, n * n);
  for (BlochVector k : {BlochVector{0.1, 0.0}, BlochVector{0.37, 0.12}, BlochVector{0.5, 0.2887}}) {
    const BandDiagram d = solve_te_bands(cell, {k}, 8, 6.0);
    const auto ref = oracle::free_photon_bands(k.kx, k.ky, cell.width(), cell.height(), n, 8);
    for (int b = 0; b < 8; ++b) EXPECT_NEAR(d.bands(b, 0), ref[b], 1e-3 * ref[b] + 1e-9) << "band " << b;
  }
}

TEST(Bands, HomogeneousMediumHasNoGap) {
  EpsilonMap cell(24, 40, 17.5, 18.2, 0.0, 0.0, 4.0);
  const BandDiagram d = solve_te_bands(cell, rectangular_zone_path(cell, 4), 6, 4.0);
  EXPECT_TRUE(find_band_gaps(d).empty());
  EXPECT_TRUE(find_band_gap(d, 0).empty());
}

TEST(Bands, StripeLatticeMatchesTransferMatrix) {
  const double a = 400.0;
  const oracle::Bilayer layers{3.4, 1.45, 0.4};
  const EpsilonMap cell = stripe_cell(a, layers.n1, layers.n2, layers.fill1, 400);
  const BandDiagram d = solve_te_bands(cell, {{0.5, 0.0}}, 2, 40.0);
  const auto [lo, hi] = oracle::gap_edges(layers, 1);
  const double to_thz = kC / (a * 1e-9) * 1e-12;
  EXPECT_NEAR(d.bands(0, 0) / (lo * to_thz), 1.0, 5e-3);
  EXPECT_NEAR(d.bands(1, 0) / (hi * to_thz), 1.0, 5e-3);
  const BandGap g = find_band_gap(d, 0);
  EXPECT_FALSE(g.empty());
}

TEST(Bands, StripeLatticeInteriorK) {
  const double a = 400.0;
  const oracle::Bilayer layers{3.0, 1.5, 0.5};
  const EpsilonMap cell = stripe_cell(a, layers.n1, layers.n2, layers.fill1, 400);
  const double to_thz = kC / (a * 1e-9) * 1e-12;
  for (double k : {0.1, 0.3}) {
    const BandDiagram d = solve_te_bands(cell, {{k, 0.0}}, 3, 40.0);
    const auto ref = oracle::band_frequencies(layers, k, 1.5);
    ASSERT_GE(ref.size(), 3u);
    for (int b = 0; b < 3; ++b) EXPECT_NEAR(d.bands(b, 0) / (ref[b] * to_thz), 1.0, 5e-3) << "k " << k << " band " << b;
  }
}

TEST(Bands, ScaleInvariance) {
  LatticeSpec s1, s2;
  s2.a = 2.0 * s1.a;
  const auto c1 = build_unit_cell(s1, 16);
  const auto c2 = build_unit_cell(s2, 16);
  const auto path = rectangular_zone_path(c1, 3);
  const BandDiagram d1 = solve_te_bands(c1, path, 4, 3.0);
  const BandDiagram d2 = solve_te_bands(c2, path, 4, 3.0);
  for (int b = 0; b < 4; ++b)
    for (int k = 0; k < d1.n_k(); ++k)
      if (d1.bands(b, k) > 0.0) {
        EXPECT_NEAR(2.0 * d2.bands(b, k) / d1.bands(b, k), 1.0, 1e-10);
      }
}

TEST(Bands, TriangularLatticeHasTeGap) {
  const LatticeSpec s;
  const auto cell = build_unit_cell(s, 24);
  const BandDiagram d = solve_te_bands(cell, rectangular_zone_path(cell, 6), 4, 3.0);
  const BandGap g = widest_gap(d);
  ASSERT_FALSE(g.empty());
  EXPECT_GT(g.width() / g.midgap(), 0.05);
}

TEST(Bands, EigenvaluesNonNegativeAndAscending) {
  const auto cell = build_unit_cell(LatticeSpec{}, 16);
  const BandDiagram d = solve_te_bands(cell, rectangular_zone_path(cell, 3), 6, 3.0);
  for (int k = 0; k < d.n_k(); ++k)
    for (int b = 0; b < d.n_bands(); ++b) {
      EXPECT_GE(d.bands(b, k), 0.0);
      if (b > 0) {
        EXPECT_GE(d.bands(b, k), d.bands(b - 1, k));
      }
    }
}

TEST(Bands, DirectRuleIsVariational) {
  const auto cell = build_unit_cell(LatticeSpec{}, 24);
  const std::vector<BlochVector> ks = {{0.2, 0.1}, {0.5, 0.0}};
  BandSolverOptions o;
  o.rule = EpsilonRule::direct;
  const BandDiagram small = solve_te_bands(cell, ks, 5, 3.0, o);
  const BandDiagram large = solve_te_bands(cell, ks, 5, 5.0, o);
  for (int k = 0; k < 2; ++k)
    for (int b = 0; b < 5; ++b) EXPECT_LE(large.bands(b, k), small.bands(b, k) * (1.0 + 1e-10));
}

TEST(Bands, TooManyBandsThrows) {
  EpsilonMap cell(8, 8, 50.0, 50.0, 0.0, 0.0, 4.0);
  EXPECT_THROW(solve_te_bands(cell, {{0.1, 0.0}}, 10000, 3.0), InvalidArgument);
  EXPECT_THROW(solve_te_bands(cell, {{0.1, 0.0}}, 2, 2.0), InvalidArgument);
  EXPECT_THROW(solve_te_bands(cell, {}, 2, 3.0), InvalidArgument);
}

TEST(Bands, MirrorOverlapOfSymmetricFields) {
  const int nx = 4, ny = 6;
  std::vector<std::complex<double>> even(nx * ny), odd(nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double y = j - 0.5 * (ny - 1);
      even[j * nx + i] = std::exp(-y * y) * (1.0 + i);
      odd[j * nx + i] = y * std::exp(-y * y) * (1.0 + i);
    }
  EXPECT_NEAR(field_mirror_overlap(even, nx, ny), 1.0, 1e-12);
  EXPECT_NEAR(field_mirror_overlap(odd, nx, ny), -1.0, 1e-12);
  EXPECT_EQ(parity_from_overlap(1.0), Parity::even);
  EXPECT_EQ(parity_from_overlap(-1.0), Parity::odd);
  EXPECT_EQ(parity_from_overlap(0.2), Parity::mixed);
}

TEST(Bands, ClassificationNeedsModes) {
  EpsilonMap cell(8, 8, 50.0, 50.0, 0.0, 0.0, 4.0);
  EXPECT_THROW(classify_guided_modes(solve_te_bands(cell, {{0.1, 0.0}}, 2, 3.0)), InvalidArgument);
}

TEST(Bands, W1LowestInGapBandIsEven) {
  const LatticeSpec s;
  const auto unit = build_unit_cell(s, 16);
  const BandGap gap = widest_gap(solve_te_bands(unit, rectangular_zone_path(unit, 4), 4, 3.0));
  ASSERT_FALSE(gap.empty());
  const auto sc = build_w1_supercell(s, 5, 16);
  BandSolverOptions o;
  o.keep_modes = true;
  const BandDiagram d = classify_guided_modes(solve_te_bands(sc, k_line(0.4, 0.5, 3), 16, 3.0, o));
  const int kl = d.n_k() - 1;
  int lowest = -1;
  for (int b = 0; b < d.n_bands(); ++b)
    if (d.bands(b, kl) > gap.lo && d.bands(b, kl) < gap.hi) {
      lowest = b;
      break;
    }
  ASSERT_GE(lowest, 0);
  EXPECT_EQ(d.parity[lowest], Parity::even);
  EXPECT_FALSE(guided_band(d, Parity::even, gap).k.empty());
}

TEST(GroupIndex, QuadraticBandMatchesDerivative) {
  BandCurve c;
  c.period_nm = 420.0;
  const double nu_e = 190.0, beta = 40.0;  // THz, THz per (2 pi / a)^2
  for (int i = 0; i <= 20; ++i) {
    const double k = 0.3 + 0.2 * i / 20.0;
    c.k.push_back(k);
    c.nu.push_back(nu_e + beta * (k - 0.5) * (k - 0.5));
  }
  const GroupIndexCurve g = group_index(c);
  ASSERT_EQ(g.flagged.size(), 1u);
  EXPECT_EQ(g.flagged.front(), 20u);
  ASSERT_EQ(g.ng.size(), 20u);
  const double c_over_a = kC / (420e-9) * 1e-12;
  for (std::size_t i = 0; i < g.ng.size(); ++i) {
    const double k = c.k[i];
    const double exact = c_over_a / (2.0 * beta * std::abs(k - 0.5));
    EXPECT_NEAR(g.ng[i] / exact, 1.0, 1e-9);
  }
}

TEST(GroupIndex, HomogeneousBandGivesIndex) {
  const double n = 2.6;
  EpsilonMap cell(24, 40, 17.5, 17.5 * std::sqrt(3.0) * 24 / 40, 0.0, 0.0, n * n);
  const BandDiagram d = solve_te_bands(cell, k_line(0.05, 0.45, 9), 1, 4.0);
  const GroupIndexCurve g = group_index(d, 0);
  ASSERT_EQ(g.ng.size(), 9u);
  for (double v : g.ng) EXPECT_NEAR(v / n, 1.0, 5e-3);
}

TEST(GroupIndex, TooFewPointsThrows) {
  BandCurve c;
  c.period_nm = 420.0;
  c.k = {0.1, 0.2};
  c.nu = {100.0, 110.0};
  EXPECT_THROW(group_index(c), InvalidArgument);
}
