#pragma once

// Composite set-ups shared by the command-line tool and the acceptance suite:
// the bulk-crystal gap, the W1 supercell with its even guided band, and the
// mode profile at the zone edge.

#include <algorithm>
#include <cmath>
#include <vector>

#include "erpcw/bands.hpp"
#include "erpcw/emitter.hpp"
#include "erpcw/errors.hpp"
#include "erpcw/geometry.hpp"

namespace erpcw {

struct W1Options {
  int rows_per_side = 8;
  int resolution = 24;
  double cutoff = 4.0;
  int unit_resolution = 24;
  double unit_cutoff = 3.0;
  int unit_per_segment = 6;
  double k_min = 0.3;
  double k_max = 0.5;
  int k_points = 21;
  int jobs = 1;
};

struct W1Setup {
  LatticeSpec spec;
  EpsilonMap unit_cell;
  EpsilonMap supercell;
  BandDiagram unit_bands;
  BandDiagram w1_bands;
  BandGap gap;
  BandCurve even_band;
  int even_band_edge_index = -1;  // band index of the even guided mode at k_max
  GroupIndexCurve ng;
};

// Widest TE gap of the bulk crystal.
inline BandGap widest_gap(const BandDiagram& d) {
  BandGap best;
  for (const auto& g : find_band_gaps(d))
    if (g.gap.width() > best.width()) best = g.gap;
  return best;
}

inline W1Setup prepare_w1(const LatticeSpec& spec, const W1Options& opt = {}) {
  require(opt.k_points >= 3, "need at least 3 k points");
  require(opt.k_max > opt.k_min, "k range is empty");
  W1Setup s;
  s.spec = spec;
  s.unit_cell = build_unit_cell(spec, opt.unit_resolution);
  BandSolverOptions uo;
  uo.jobs = opt.jobs;
  s.unit_bands = solve_te_bands(s.unit_cell, rectangular_zone_path(s.unit_cell, opt.unit_per_segment), 4,
                                opt.unit_cutoff, uo);
  s.gap = widest_gap(s.unit_bands);
  if (s.gap.empty()) throw NumericalError("bulk crystal shows no TE gap");
  s.supercell = build_w1_supercell(spec, opt.rows_per_side, opt.resolution);
  BandSolverOptions so;
  so.keep_modes = true;
  so.jobs = opt.jobs;
  s.w1_bands = classify_guided_modes(solve_te_bands(s.supercell, k_line(opt.k_min, opt.k_max, opt.k_points),
                                                    2 * opt.rows_per_side + 6, opt.cutoff, so));
  s.even_band = guided_band(s.w1_bands, Parity::even, s.gap);
  if (s.even_band.k.empty() || s.even_band.k.back() != s.w1_bands.k_points.back().kx)
    throw NumericalError("no even guided band inside the gap at the zone edge");
  const int kl = s.w1_bands.n_k() - 1;
  for (int b = 0; b < s.w1_bands.n_bands(); ++b)
    if (s.w1_bands.bands(b, kl) == s.even_band.nu.back()) s.even_band_edge_index = b;
  s.ng = group_index(s.even_band);
  return s;
}

// Lowest frequency of the even guided band over the sampled k range.
inline double even_band_edge(const W1Setup& s) {
  return *std::min_element(s.even_band.nu.begin(), s.even_band.nu.end());
}

inline ModeProfile zone_edge_profile(const W1Setup& s) {
  return make_mode_profile(s.w1_bands, s.supercell, s.w1_bands.n_k() - 1, s.even_band_edge_index);
}

}  // namespace erpcw
