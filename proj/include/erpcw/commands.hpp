#pragma once

// Command implementations behind the erpcw tool. Each reads its keys from the
// run configuration, writes data files into the output directory and returns
// a JSON summary; the driver adds provenance.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "erpcw/analysis.hpp"
#include "erpcw/bands.hpp"
#include "erpcw/config.hpp"
#include "erpcw/emitter.hpp"
#include "erpcw/expsim.hpp"
#include "erpcw/geometry.hpp"
#include "erpcw/grid_io.hpp"
#include "erpcw/ldos.hpp"
#include "erpcw/workflows.hpp"

namespace erpcw {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunContext {
  std::filesystem::path out_dir = "erpcw-out";
  std::uint64_t seed = 1;
  int jobs = 1;
  std::ostream* log = nullptr;  // human-readable summary lines
};

namespace detail {

inline std::ofstream open_out(const RunContext& ctx, const std::string& name, bool binary = false) {
  std::ofstream os(ctx.out_dir / name, binary ? std::ios::binary : std::ios::out);
  if (!os) throw InvalidArgument("cannot write " + (ctx.out_dir / name).string());
  return os;
}

inline void say(const RunContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << '\n';
}

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

inline LatticeSpec read_lattice(RunConfig& c) {
  LatticeSpec s;
  s.a = c.get_double("lattice.a", s.a);
  s.r_over_a = c.get_double("lattice.r_over_a", s.r_over_a);
  s.slab_thickness = c.get_double("lattice.slab_thickness", s.slab_thickness);
  s.n_slab = c.get_double("lattice.n_slab", s.n_slab);
  s.n_hole = c.get_double("lattice.n_hole", s.n_hole);
  s.validate();
  return s;
}

inline W1Options read_w1(RunConfig& c, int jobs) {
  W1Options o;
  o.rows_per_side = c.get_int("w1.rows_per_side", o.rows_per_side);
  o.resolution = c.get_int("w1.resolution", o.resolution);
  o.cutoff = c.get_double("w1.cutoff", o.cutoff);
  o.unit_resolution = c.get_int("w1.unit_resolution", o.unit_resolution);
  o.unit_cutoff = c.get_double("w1.unit_cutoff", o.unit_cutoff);
  o.unit_per_segment = c.get_int("w1.unit_per_segment", o.unit_per_segment);
  o.k_min = c.get_double("w1.k_min", o.k_min);
  o.k_max = c.get_double("w1.k_max", o.k_max);
  o.k_points = c.get_int("w1.k_points", o.k_points);
  o.jobs = jobs;
  require(o.rows_per_side >= 3, "[w1] rows_per_side must be >= 3");
  require(o.k_min >= 0.0 && o.k_max <= 0.5, "[w1] k range must lie within [0, 0.5]");
  return o;
}

inline EfficiencyChain read_chain(RunConfig& c) {
  EfficiencyChain ch;
  auto term = [&](const std::string& name, double& v, double& s) {
    v = c.get_double("chain." + name, v);
    s = c.get_double("chain.sigma_" + name, s);
  };
  term("eta_exc", ch.eta_exc, ch.s_eta_exc);
  term("P_Z1", ch.P_Z1, ch.s_P_Z1);
  term("beta", ch.beta, ch.s_beta);
  term("eta_sc", ch.eta_sc, ch.s_eta_sc);
  term("eta_ftc", ch.eta_ftc, ch.s_eta_ftc);
  term("eta_ft", ch.eta_ft, ch.s_eta_ft);
  term("eta_bs", ch.eta_bs, ch.s_eta_bs);
  term("eta_os", ch.eta_os, ch.s_eta_os);
  term("eta_flt", ch.eta_flt, ch.s_eta_flt);
  term("eta_qe", ch.eta_qe, ch.s_eta_qe);
  ch.validate();
  return ch;
}

inline TransitionRates read_rates(RunConfig& c) {
  const double tau = c.get_double("emitter.tau_bulk_us", kBulkLifetimeUs);
  const double p_z1 = c.get_double("emitter.p_z1", kBulkBranchingZ1);
  BranchingTable b = default_branching(p_z1);
  const auto table = c.get_list("emitter.branching", {});
  if (!table.empty()) {
    require(table.size() == kLevels, "[emitter] branching needs 8 values (Z1..Z8)");
    std::copy(table.begin(), table.end(), b.p.begin());
  }
  return rates_from_bulk(tau, b);
}

// F_2..F_8 from a single value or a list of 7.
inline PurcellVector read_inhibition(RunConfig& c, const std::string& key, double def) {
  const auto v = c.get_list(key, {def});
  require(v.size() == 1 || v.size() == kLevels - 1, "[" + key + "] needs 1 or 7 values (F2..F8)");
  PurcellVector f = PurcellVector::uniform(1.0);
  for (int i = 1; i < kLevels; ++i) f.F[i] = v.size() == 1 ? v[0] : v[i - 1];
  return f;
}

inline std::vector<DipoleAxis> parse_axes(const std::string& s) {
  std::vector<DipoleAxis> out;
  for (char ch : s) {
    if (ch == ',' || ch == ' ') continue;
    if (ch == 'x')
      out.push_back(DipoleAxis::x);
    else if (ch == 'y')
      out.push_back(DipoleAxis::y);
    else if (ch == 'z')
      out.push_back(DipoleAxis::z);
    else
      throw InvalidArgument(std::string("unknown dipole orientation '") + ch + "'");
  }
  require(!out.empty(), "no dipole orientation given");
  return out;
}

// Wide layout: k, band_0..band_n. k is kx along a straight line in kx, else the
// cumulative path length in units of 2 pi / a.
inline void write_bands_csv(std::ostream& os, const BandDiagram& d) {
  bool along_x = true;
  for (const auto& k : d.k_points) along_x = along_x && k.ky == 0.0;
  os << "k";
  for (int b = 0; b < d.n_bands(); ++b) os << ",band_" << b;
  os << '\n' << std::setprecision(12);
  double path = 0.0;
  for (int ik = 0; ik < d.n_k(); ++ik) {
    if (ik > 0)
      path += std::hypot(d.k_points[ik].kx - d.k_points[ik - 1].kx, d.k_points[ik].ky - d.k_points[ik - 1].ky);
    os << (along_x ? d.k_points[ik].kx : path);
    for (int b = 0; b < d.n_bands(); ++b) os << ',' << d.bands(b, ik);
    os << '\n';
  }
}

inline void write_parity_csv(std::ostream& os, const BandDiagram& d) {
  os << "kx,ky,band,mirror_overlap,parity\n" << std::setprecision(12);
  for (int ik = 0; ik < d.n_k(); ++ik)
    for (int b = 0; b < d.n_bands(); ++b) {
      const double m = d.mirror_overlap(b, ik);
      os << d.k_points[ik].kx << ',' << d.k_points[ik].ky << ',' << b << ',' << m << ','
         << to_string(parity_from_overlap(m)) << '\n';
    }
}

inline void write_ng_csv(std::ostream& os, const GroupIndexCurve& g) {
  os << "nu_THz,ng\n" << std::setprecision(12);
  for (std::size_t k = 0; k < g.nu.size(); ++k) os << g.nu[k] << ',' << g.ng[k] << '\n';
}

inline void write_histogram_csv(std::ostream& os, const Histogram& h) {
  os << "lo,hi,count\n" << std::setprecision(12);
  for (std::size_t b = 0; b < h.counts.size(); ++b) os << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.counts[b] << '\n';
}

inline nlohmann::json gap_json(const BandGap& g) { return {{"lo_THz", g.lo}, {"hi_THz", g.hi}, {"width_THz", g.width()}}; }

}  // namespace detail

// ---------------------------------------------------------------- bands

inline nlohmann::json cmd_bands(RunConfig& c, const RunContext& ctx) {
  const LatticeSpec spec = detail::read_lattice(c);
  const std::string structure = c.get_choice("bands.structure", "w1", {"unit", "w1"});
  nlohmann::json rep;
  rep["structure"] = structure;
  if (structure == "unit") {
    const int res = c.get_int("bands.resolution", 24);
    const double cutoff = c.get_double("bands.cutoff", 3.0);
    const int per_seg = c.get_int("bands.per_segment", 8);
    const int n_bands = c.get_int("bands.n_bands", 6);
    c.reject_unknown();
    const EpsilonMap cell = build_unit_cell(spec, res);
    BandSolverOptions o;
    o.jobs = ctx.jobs;
    const BandDiagram d = solve_te_bands(cell, rectangular_zone_path(cell, per_seg), n_bands, cutoff, o);
    auto os = detail::open_out(ctx, "bands.csv");
    detail::write_bands_csv(os, d);
    nlohmann::json gaps = nlohmann::json::array();
    for (const auto& g : find_band_gaps(d)) gaps.push_back({{"below_band", g.below}, {"gap", detail::gap_json(g.gap)}});
    rep["gaps"] = gaps;
    const BandGap w = widest_gap(d);
    rep["widest_gap"] = detail::gap_json(w);
    detail::say(ctx, "widest TE gap: " + detail::fmt(w.lo, 6) + " - " + detail::fmt(w.hi, 6) + " THz");
    return rep;
  }
  const W1Options o = detail::read_w1(c, ctx.jobs);
  c.reject_unknown();
  const W1Setup s = prepare_w1(spec, o);
  {
    auto os = detail::open_out(ctx, "bands.csv");
    detail::write_bands_csv(os, s.w1_bands);
  }
  if (s.w1_bands.mirror_overlap.rows() == s.w1_bands.n_bands()) {
    auto os = detail::open_out(ctx, "parity.csv");
    detail::write_parity_csv(os, s.w1_bands);
  }
  {
    auto os = detail::open_out(ctx, "even_band.csv");
    os << "kx,nu_THz\n" << std::setprecision(12);
    for (std::size_t k = 0; k < s.even_band.k.size(); ++k) os << s.even_band.k[k] << ',' << s.even_band.nu[k] << '\n';
  }
  {
    auto os = detail::open_out(ctx, "group_index.csv");
    detail::write_ng_csv(os, s.ng);
  }
  rep["bulk_gap"] = detail::gap_json(s.gap);
  rep["even_band_edge_THz"] = even_band_edge(s);
  rep["even_band_index"] = s.even_band_edge_index;
  double ng_max = 0.0;
  for (double v : s.ng.ng) ng_max = std::max(ng_max, v);
  rep["ng_max"] = ng_max;
  rep["ng_flagged_points"] = s.ng.flagged.size();
  detail::say(ctx, "bulk gap " + detail::fmt(s.gap.lo, 6) + " - " + detail::fmt(s.gap.hi, 6) +
                       " THz, even band edge " + detail::fmt(even_band_edge(s), 6) + " THz");
  return rep;
}

// ---------------------------------------------------------------- ldos

inline nlohmann::json cmd_ldos(RunConfig& c, const RunContext& ctx) {
  const LatticeSpec spec = detail::read_lattice(c);
  WaveguideLayout lay;
  lay.slow_periods = c.get_int("device.slow_periods", 20);
  lay.coupler_periods = c.get_int("device.coupler_periods", 0);
  lay.stretch_factor = c.get_double("device.stretch_factor", lay.stretch_factor);
  lay.mirror_holes = c.get_int("device.mirror_holes", 0);
  lay.strip_periods = c.get_int("device.strip_periods", 0);
  lay.reflector_hole = c.get_bool("device.reflector_hole", false);
  const int res = c.get_int("device.resolution", 16);
  DeviceOptions dopt;
  dopt.margin_a = c.get_double("device.margin_a", dopt.margin_a);
  FdtdConfig f;
  f.courant = c.get_double("fdtd.courant", f.courant);
  f.run_time = c.get_double("fdtd.run_time", 300.0);
  f.pml_thickness = c.get_int("fdtd.pml_thickness", f.pml_thickness);
  f.source_bandwidth = c.get_double("fdtd.source_bandwidth", f.source_bandwidth);
  f.n_freq = c.get_int("fdtd.n_freq", f.n_freq);
  f.residual_threshold = c.get_double("fdtd.residual_threshold", f.residual_threshold);
  f.pml_reflection = c.get_double("fdtd.pml_reflection", f.pml_reflection);
  const double cutoff = c.get_double("fdtd.filter_cutoff", kLdosFilterCutoff);
  double center = c.get_double("fdtd.center_thz", 0.0);
  const auto xs = c.get_list("ldos.x", {});
  const auto ys = c.get_list("ldos.y", {});
  const auto axes = detail::parse_axes(c.get_string("ldos.orientations", "y"));
  const W1Options wo = detail::read_w1(c, ctx.jobs);
  c.reject_unknown();
  require(xs.size() == ys.size(), "[ldos] x and y lists differ in length");
  lay.crystal_rows = 2 * wo.rows_per_side + 1;

  nlohmann::json rep;
  const DeviceExtents ext = device_extents(spec, lay, dopt);
  std::vector<ScanPoint> pts;
  const double period_start = ext.mirror_end + (lay.slow_periods / 2) * spec.a;
  if (xs.empty() || center <= 0.0) {
    // Position at the Ey maximum of the zone-edge even mode, midway along the slow section.
    const W1Setup s = prepare_w1(spec, wo);
    if (center <= 0.0) center = s.gap.midgap();
    if (xs.empty()) {
      const ModeMaxima m = mode_maxima(s.w1_bands, s.supercell, s.w1_bands.n_k() - 1, s.even_band_edge_index);
      pts.push_back({period_start + m.ey_max.x, m.ey_max.y});
    }
    rep["bulk_gap"] = detail::gap_json(s.gap);
    rep["even_band_edge_THz"] = even_band_edge(s);
  }
  for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back({xs[i], ys[i]});
  const EpsilonMap device = build_finite_device(spec, lay, res, dopt);
  const auto spectra = ldos_position_scan(device, pts, axes, center, f, ctx.jobs, 0.0, cutoff);
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    const auto& s = spectra[i];
    const std::string name = "ldos_" + std::to_string(i / axes.size()) + "_" + to_string(s.axis) + ".csv";
    auto os = detail::open_out(ctx, name);
    write_ldos_csv(os, s);
    auto j = ldos_to_json(s);
    j.erase("nu_THz");
    j.erase("rho_rel");
    j["file"] = name;
    list.push_back(j);
  }
  rep["center_THz"] = center;
  rep["device_cells"] = {device.nx(), device.ny()};
  rep["spectra"] = list;
  detail::say(ctx, std::to_string(spectra.size()) + " LDOS spectra written");
  return rep;
}

// ---------------------------------------------------------------- lifetime

inline nlohmann::json cmd_lifetime(RunConfig& c, const RunContext& ctx) {
  const TransitionRates rates = detail::read_rates(c);
  PurcellVector F = PurcellVector::uniform(1.0);
  const auto fl = c.get_list("emitter.purcell", {1.0});
  require(fl.size() == 1 || fl.size() == kLevels, "[emitter] purcell needs 1 or 8 values (F1..F8)");
  for (int i = 0; i < kLevels; ++i) F.F[i] = fl.size() == 1 ? fl[0] : fl[i];
  c.reject_unknown();
  const double tau = modified_lifetime(rates, F);
  const BranchingTable p = modified_branching(rates, F);
  double sum = 0.0;
  for (double v : p.p) sum += v;
  auto os = detail::open_out(ctx, "lifetime.csv");
  os << "level,F,p_bulk,p_modified\n" << std::setprecision(12);
  for (int i = 0; i < kLevels; ++i)
    os << LevelScheme::label(i) << ',' << F.F[i] << ',' << rates.A[i] / rates.A_total << ',' << p.p[i] << '\n';
  detail::say(ctx, "tau' = " + detail::fmt(tau, 6) + " us, p'_Z1 = " + detail::fmt(p.p[0], 6));
  return {{"tau_us", tau}, {"p_z1", p.p[0]}, {"branching_sum", sum}, {"branching", p.p}};
}

// ---------------------------------------------------------------- ensemble

inline nlohmann::json cmd_ensemble(RunConfig& c, const RunContext& ctx) {
  const LatticeSpec spec = detail::read_lattice(c);
  const W1Options wo = detail::read_w1(c, ctx.jobs);
  const TransitionRates rates = detail::read_rates(c);
  const PurcellVector inh = detail::read_inhibition(c, "ensemble.inhibition", 0.5);
  const int n = c.get_int("ensemble.count", 10000);
  const double sf = c.get_double("ensemble.spatial_factor", kSpatialFactor);
  const std::string fmode = c.get_choice("ensemble.f_max_mode", "balanced", {"balanced", "value", "group_index"});
  double f_max = c.get_double("ensemble.f_max", 0.0);
  const double ng = c.get_double("ensemble.group_index", 140.0);
  const double n_si = c.get_double("ensemble.refractive_index", kSiliconIndex);
  EnsembleOptions eo;
  eo.region_half_height = c.get_double("ensemble.region_half_height", 0.0);
  eo.slab_only = c.get_bool("ensemble.slab_only", true);
  eo.histogram_bins = c.get_int("ensemble.histogram_bins", eo.histogram_bins);
  eo.target_spatial_factor = sf;
  eo.jobs = ctx.jobs;
  c.reject_unknown();
  if (fmode == "balanced") {
    // Maximally coupled emitter decays at the bulk rate.
    double rest = 0.0;
    for (int i = 1; i < kLevels; ++i) rest += inh.F[i] * rates.A[i];
    require(rest < rates.A_total, "inhibition leaves no room for a balanced F_max");
    f_max = (rates.A_total - rest) / rates.A[0];
  } else if (fmode == "group_index") {
    f_max = purcell_max(ng, n_si);
  }
  const W1Setup s = prepare_w1(spec, wo);
  const ModeProfile prof = zone_edge_profile(s);
  const EnsembleResult r = sample_ensemble(n, prof, f_max, inh, rates, ctx.seed, eo);
  {
    auto os = detail::open_out(ctx, "lifetime_histogram.csv");
    detail::write_histogram_csv(os, r.tau_histogram);
  }
  {
    auto os = detail::open_out(ctx, "branching_histogram.csv");
    detail::write_histogram_csv(os, r.p_z1_histogram);
  }
  {
    auto os = detail::open_out(ctx, "members.csv");
    os << "x_nm,y_nm,dx,dy,dz,coupling,tau_us,p_z1\n" << std::setprecision(10);
    for (const auto& m : r.members)
      os << m.emitter.x << ',' << m.emitter.y << ',' << m.emitter.dipole.x << ',' << m.emitter.dipole.y << ','
         << m.emitter.dipole.z << ',' << m.coupling << ',' << m.tau_us << ',' << m.p_z1 << '\n';
  }
  std::size_t above = 0;
  for (const auto& m : r.members)
    if (m.tau_us > rates.tau_bulk) ++above;
  const double closed = mean_rate_lifetime(rates, f_max, sf, inh);
  detail::say(ctx, "mean tau' = " + detail::fmt(r.tau.mean) + " us (closed form " + detail::fmt(closed) +
                       "), skewness " + detail::fmt(r.tau.skewness, 3));
  return {{"f_max", f_max},
          {"tau_mean_us", r.tau.mean},
          {"tau_sd_us", r.tau.sd},
          {"tau_skewness", r.tau.skewness},
          {"p_z1_mean", r.p_z1.mean},
          {"p_z1_sd", r.p_z1.sd},
          {"fraction_above_bulk", static_cast<double>(above) / n},
          {"closed_form_mean_us", closed},
          {"mean_coupling_raw", r.mean_coupling},
          {"coupling_scale", r.coupling_scale}};
}

// ---------------------------------------------------------------- zeeman

inline nlohmann::json cmd_zeeman(RunConfig& c, const RunContext& ctx) {
  ZeemanModel z;
  z.tuning_ghz_per_t = c.get_double("zeeman.tuning_ghz_per_t", z.tuning_ghz_per_t);
  z.field_max_t = c.get_double("zeeman.field_max_t", z.field_max_t);
  const int points = c.get_int("zeeman.points", 31);
  const double nu0 = c.get_double("zeeman.center_thz", nm_to_thz(1538.0));
  const double A = c.get_double("ng.A_thz", 17.0);
  const double nu_e = c.get_double("ng.nu_e_thz", 194.70);
  const TransitionRates rates = detail::read_rates(c);
  const PurcellVector inh = detail::read_inhibition(c, "emitter.inhibition", 0.5);
  const double sf = c.get_double("emitter.spatial_factor", kSpatialFactor);
  const double n = c.get_double("emitter.refractive_index", kSiliconIndex);
  c.reject_unknown();
  const auto nus = z.frequencies(nu0, points);
  require(nus.front() > nu_e, "Zeeman sweep reaches the band edge nu_e");
  GroupIndexCurve g;
  for (double nu : nus) {
    g.nu.push_back(nu);
    g.ng.push_back(A / (nu - nu_e));
  }
  if (g.nu.size() < 2) {
    g.nu.push_back(nus.front() + 1e-6);
    g.ng.push_back(A / (g.nu.back() - nu_e));
  }
  const auto curve = zeeman_lifetime_curve(g, rates, inh, sf, nus, n);
  auto os = detail::open_out(ctx, "zeeman.csv");
  os << "nu_THz,detuning_GHz,ng,tau_us\n" << std::setprecision(12);
  for (const auto& p : curve) os << p.nu << ',' << (p.nu - nu0) * 1e3 << ',' << p.ng << ',' << p.tau_us << '\n';
  double tmin = curve.front().tau_us, tmax = tmin;
  for (const auto& p : curve) {
    tmin = std::min(tmin, p.tau_us);
    tmax = std::max(tmax, p.tau_us);
  }
  detail::say(ctx, "tau' range " + detail::fmt(tmin) + " - " + detail::fmt(tmax) + " us");
  return {{"points", curve.size()}, {"tau_min_us", tmin}, {"tau_max_us", tmax}, {"tuning_placeholder", z.placeholder}};
}

// ---------------------------------------------------------------- synth

inline nlohmann::json cmd_synth(RunConfig& c, const RunContext& ctx) {
  PulseSequence seq;
  seq.pulse_length = c.get_double("sequence.pulse_length_us", seq.pulse_length);
  seq.chirp_width = c.get_double("sequence.chirp_width_mhz", seq.chirp_width);
  seq.repetitions = c.get_int("sequence.repetitions", seq.repetitions);
  seq.detection_window = c.get_double("sequence.detection_window_us", seq.detection_window);
  seq.rep_period = c.get_double("sequence.rep_period_us", seq.rep_period);
  const double s_min = c.get_double("sequence.scan_min_mhz", -100.0);
  const double s_max = c.get_double("sequence.scan_max_mhz", 100.0);
  const double s_step = c.get_double("sequence.scan_step_mhz", 2.0);
  const EfficiencyChain chain = detail::read_chain(c);
  DetectorModel det;
  det.dark_count_rate = c.get_double("detector.dark_count_rate", det.dark_count_rate);
  det.quantum_efficiency = c.get_double("detector.quantum_efficiency", chain.eta_qe);
  det.dead_time = c.get_double("detector.dead_time_ns", det.dead_time);
  LineEnsembleOptions lo;
  const std::string source = c.get_choice("emitters.source", "list", {"list", "random"});
  const auto det_list = c.get_list("emitters.detuning_ghz", {0.0});
  const auto fwhm_list = c.get_list("emitters.fwhm_mhz", {21.5});
  lo.count = c.get_int("emitters.count", lo.count);
  lo.spread_ghz = c.get_double("emitters.spread_ghz", lo.spread_ghz);
  lo.fwhm_mean = c.get_double("emitters.fwhm_mean_mhz", lo.fwhm_mean);
  lo.fwhm_sd = c.get_double("emitters.fwhm_sd_mhz", lo.fwhm_sd);
  lo.fwhm_floor = c.get_double("emitters.fwhm_floor_mhz", lo.fwhm_floor);
  lo.tau_us = c.get_double("emitters.tau_us", lo.tau_us);
  lo.p_z1 = c.get_double("emitters.p_z1", lo.p_z1);
  const bool filter_on = c.get_bool("synth.filter", false);
  const double stream_det = c.get_double("synth.stream_detuning_mhz", 0.0);
  const int g2_lag = c.get_int("synth.g2_max_lag", 50);
  const int delay_bins = c.get_int("synth.delay_bins", 60);
  const std::string fmt = c.get_choice("output.stream_format", "both", {"binary", "csv", "both"});
  c.reject_unknown();
  seq.validate();
  require(s_step > 0.0 && s_max >= s_min, "[sequence] scan range is invalid");
  for (double d = s_min; d <= s_max + 1e-9 * s_step; d += s_step) seq.laser_detuning_grid.push_back(d);

  std::vector<EmitterSource> em;
  if (source == "random") {
    em = random_line_ensemble(lo, ctx.seed ^ 0x9e3779b97f4a7c15ull);
  } else {
    require(fwhm_list.size() == 1 || fwhm_list.size() == det_list.size(),
            "[emitters] fwhm_mhz needs 1 value or one per detuning");
    for (std::size_t i = 0; i < det_list.size(); ++i) {
      EmitterSource e;
      e.emitter.detuning_ghz = det_list[i];
      e.emitter.spectral_diffusion_fwhm_mhz = fwhm_list.size() == 1 ? fwhm_list[0] : fwhm_list[i];
      e.tau_us = lo.tau_us;
      e.p_z1 = lo.p_z1;
      em.push_back(e);
    }
  }
  const FluorescenceSpectrum spec = scan_spectrum(em, seq, chain, det, ctx.seed, filter_on, -1.0, ctx.jobs);
  {
    auto os = detail::open_out(ctx, "spectrum.csv");
    write_spectrum_csv(os, spec);
  }
  StreamOptions so;
  so.laser_detuning = stream_det;
  const TimeTagStream st = simulate_stream(em, seq, chain, det, filter_on, ctx.seed, so);
  if (fmt != "csv") save_stream_binary((ctx.out_dir / "stream.bin").string(), st);
  if (fmt != "binary") {
    auto os = detail::open_out(ctx, "stream.csv");
    write_stream_csv(os, st);
  }
  {
    const auto h = delay_histogram(st, delay_bins);
    auto os = detail::open_out(ctx, "delays.csv");
    os << "t_us,counts\n" << std::setprecision(12);
    for (std::size_t k = 0; k < h.t.size(); ++k) os << h.t[k] << ',' << h.counts[k] << '\n';
  }
  nlohmann::json rep;
  if (st.events.size() >= 2) {
    try {
      const auto g = g2_from_stream(st, g2_lag);
      auto os = detail::open_out(ctx, "g2.csv");
      write_g2_csv(os, g);
      rep["g2_zero_raw"] = g.g2_zero;
    } catch (const InvalidArgument&) {
      rep["g2_zero_raw"] = nullptr;
    }
  }
  std::size_t dark = 0;
  for (const auto& e : st.events) dark += e.origin == EventOrigin::dark;
  rep["emitters"] = em.size();
  rep["events"] = st.events.size();
  rep["dark_events"] = dark;
  rep["dark_floor_per_pulse"] = spec.dark_floor;
  rep["sequence"] = to_json(seq);
  rep["chain"] = to_json(chain);
  rep["detector"] = to_json(det);
  detail::say(ctx, std::to_string(em.size()) + " emitter(s), " + std::to_string(st.events.size()) +
                       " events in the stream, " + std::to_string(spec.detuning.size()) + " scan points");
  return rep;
}

// ---------------------------------------------------------------- analyze

inline nlohmann::json cmd_analyze(RunConfig& c, const RunContext& ctx) {
  const std::string spectrum_path = c.get_string("input.spectrum", "");
  const std::string stream_path = c.get_string("input.stream", "");
  const std::string filtered_path = c.get_string("input.filtered_stream", "");
  const double min_prom = c.get_double("analysis.min_prominence", 0.2);
  const double floor = c.get_double("analysis.dark_floor", 0.0);
  const int bins = c.get_int("analysis.delay_bins", 60);
  const bool offset = c.get_bool("analysis.fit_offset", true);
  const int lag = c.get_int("analysis.g2_max_lag", 50);
  const double dark_rate = c.get_double("analysis.dark_count_rate", 10.0);
  const double chi = c.get_double("analysis.filter_transmission", 0.476);
  const double s_chi = c.get_double("analysis.sigma_filter_transmission", 0.005);
  c.reject_unknown();
  require(!spectrum_path.empty() || !stream_path.empty(), "[input] needs a spectrum and/or a stream file");
  nlohmann::json rep;
  if (!spectrum_path.empty()) {
    std::ifstream is(spectrum_path);
    if (!is) throw InvalidArgument("cannot open " + spectrum_path);
    FluorescenceSpectrum s = read_spectrum_csv(is);
    s.dark_floor = floor;
    const auto peaks = find_peaks(s, min_prom);
    std::vector<PeakFit> fits;
    std::vector<double> widths;
    for (const auto& w : peaks) {
      fits.push_back(fit_peak_window(s, w));
      if (fits.back().converged) widths.push_back(fits.back().fwhm);
    }
    auto os = detail::open_out(ctx, "peaks.csv");
    write_peaks_csv(os, fits);
    rep["peaks"] = peaks.size();
    rep["converged_fits"] = widths.size();
    if (!widths.empty()) {
      const auto st = sample_stats(widths);
      rep["linewidth_mean"] = st.mean;
      rep["linewidth_sd"] = st.sd;
      rep["linewidth_min"] = *std::min_element(widths.begin(), widths.end());
    }
    detail::say(ctx, std::to_string(peaks.size()) + " peaks, " + std::to_string(widths.size()) + " converged fits");
  }
  if (!stream_path.empty()) {
    const TimeTagStream st = load_stream_binary(stream_path);
    const auto h = delay_histogram(st, bins);
    const DecayFit d = fit_exponential(h, offset);
    {
      auto os = detail::open_out(ctx, "lifetime_fit.csv");
      write_decay_csv(os, {d});
    }
    rep["lifetime"] = to_json(d);
    const double reps = st.sequence.repetitions;
    const double B = dark_rate * st.sequence.detection_window * 1e-6;
    const double total = static_cast<double>(st.events.size()) / reps;
    if (st.events.size() >= 2) {
      try {
        const auto g = g2_from_stream(st, lag);
        const double S = std::max(total - B, 0.0);
        if (S > 0.0) rep["g2"] = to_json(correct_g2(g.g2_zero, S, B, g2_zero_sigma(g)));
        auto os = detail::open_out(ctx, "g2.csv");
        write_g2_csv(os, g);
      } catch (const InvalidArgument& e) {
        rep["g2_error"] = e.what();
      }
    }
    detail::say(ctx, "lifetime " + detail::fmt(d.tau) + " +- " + detail::fmt(d.s_tau, 2) + " us");
    if (!filtered_path.empty()) {
      const TimeTagStream sf = load_stream_binary(filtered_path);
      const double rf = sf.sequence.repetitions;
      const double Bf = dark_rate * sf.sequence.detection_window * 1e-6;
      const double I_f = std::max(static_cast<double>(sf.events.size()) / rf - Bf, 0.0);
      const double I_0 = total - B;
      const auto b = branching_from_filter(I_f, I_0, chi, std::sqrt(static_cast<double>(sf.events.size())) / rf,
                                           std::sqrt(static_cast<double>(st.events.size())) / reps, s_chi);
      rep["branching"] = to_json(b);
      detail::say(ctx, "Z1 branching " + detail::fmt(b.value, 3) + " +- " + detail::fmt(b.sigma, 2));
    }
  }
  return rep;
}

// ---------------------------------------------------------------- ng

inline nlohmann::json cmd_ng(RunConfig& c, const RunContext& ctx) {
  const std::string source = c.get_choice("ng.source", "synthetic", {"synthetic", "list"});
  const double L = c.get_double("ng.length_um", 13.0);
  const double cl = c.get_double("ng.speed_of_light", kSpeedOfLight);
  const auto listed = c.get_list("ng.resonances_thz", {});
  const double A = c.get_double("ng.A_thz", 17.0);
  const double nu_e = c.get_double("ng.nu_e_thz", 194.70);
  const double start = c.get_double("ng.start_thz", 194.82);
  const int count = c.get_int("ng.count", 12);
  c.reject_unknown();
  const std::vector<double> res = source == "list" ? listed : reciprocal_comb(A, nu_e, start, count, L, cl);
  const GroupIndexCurve g = ng_from_fsr(res, L, cl);
  {
    auto os = detail::open_out(ctx, "resonances.csv");
    os << "nu_THz\n" << std::setprecision(15);
    for (double v : res) os << v << '\n';
  }
  {
    auto os = detail::open_out(ctx, "group_index.csv");
    detail::write_ng_csv(os, g);
  }
  nlohmann::json rep;
  rep["points"] = g.nu.size();
  rep["ng_max"] = *std::max_element(g.ng.begin(), g.ng.end());
  if (g.nu.size() >= 3) {
    const ReciprocalFit f = fit_reciprocal(g);
    rep["fit"] = to_json(f);
    detail::say(ctx, "n_g = A/(nu - nu_e): A = " + detail::fmt(f.A, 6) + " THz, nu_e = " + detail::fmt(f.nu_e, 8) +
                         " THz" + (f.converged ? "" : " (fit failed)"));
  }
  return rep;
}

// ---------------------------------------------------------------- budget

inline nlohmann::json cmd_budget(RunConfig& c, const RunContext& ctx) {
  const EfficiencyChain chain = detail::read_chain(c);
  const double m = c.get_double("measured.probability", 0.0341);
  const double s = c.get_double("measured.sigma", 0.0023);
  c.reject_unknown();
  const HypothesisReport h = filtering_hypothesis_test(chain, m, s);
  {
    auto os = detail::open_out(ctx, "budget.csv");
    os << "term,value,sigma\n" << std::setprecision(12);
    for (const auto& t : chain.terms()) os << t.name << ',' << t.value << ',' << t.sigma << '\n';
  }
  std::ostringstream line;
  line << std::fixed << std::setprecision(2) << "bound " << 100.0 * h.bound << "% +- " << 100.0 * h.bound_sigma
       << "%, measured " << 100.0 * h.measured << "% +- " << 100.0 * h.measured_sigma << "%, excess "
       << h.excess_sigma << " sigma, filtering-only hypothesis " << (h.rejected ? "rejected" : "not rejected");
  detail::say(ctx, line.str());
  auto j = to_json(h);
  j["chain"] = to_json(chain);
  return j;
}

using CommandFn = std::function<nlohmann::json(RunConfig&, const RunContext&)>;

inline const std::map<std::string, CommandFn>& command_table() {
  static const std::map<std::string, CommandFn> t = {
      {"bands", cmd_bands}, {"ldos", cmd_ldos},   {"lifetime", cmd_lifetime}, {"ensemble", cmd_ensemble},
      {"zeeman", cmd_zeeman}, {"synth", cmd_synth}, {"analyze", cmd_analyze},   {"ng", cmd_ng},
      {"budget", cmd_budget}};
  return t;
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

}  // namespace erpcw
