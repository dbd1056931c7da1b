#pragma once

// W1 photonic-crystal waveguide geometry rasterized onto 2D permittivity grids.
//
// Coordinates: x runs along the waveguide (Gamma-K), y is the in-plane
// transverse direction, and the waveguide axis is y = 0. All lengths are nm.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "erpcw/errors.hpp"

namespace erpcw {

struct LatticeSpec {
  double a = 420.0;               // lattice constant [nm]
  double r_over_a = 0.28;
  double slab_thickness = 220.0;  // kept for provenance; the 2D model ignores it
  double n_slab = 2.85;           // effective index of the slab mode
  double n_hole = 1.0;

  double radius() const { return r_over_a * a; }
  double row_pitch() const { return std::sqrt(3.0) / 2.0 * a; }

  void validate() const {
    require(a > 0.0, "lattice constant must be positive");
    require(r_over_a >= 0.0 && r_over_a < 0.5, "r/a must lie in [0, 0.5)");
    require(n_hole >= 1.0, "hole index must be >= 1");
    require(n_slab > n_hole, "slab index must exceed hole index");
  }
};

// Paper device: a = 420 nm, r = 0.28a, bulk silicon index.
inline LatticeSpec paper_lattice() {
  LatticeSpec s;
  s.n_slab = 3.45;
  return s;
}

struct WaveguideLayout {
  int slow_periods = 31;
  int coupler_periods = 4;
  double stretch_factor = 1.07;
  int mirror_holes = 7;
  int crystal_rows = 33;   // total row count including the omitted center row
  bool reflector_hole = false;
  int strip_periods = 3;   // length of the output strip waveguide
  double strip_width_over_a = 0.0;  // 0 selects sqrt(3) - 2 r/a

  void validate() const {
    require(slow_periods >= 0 && coupler_periods >= 0 && mirror_holes >= 0 &&
                crystal_rows >= 0 && strip_periods >= 0,
            "waveguide layout counts must be non-negative");
    require(stretch_factor >= 1.0, "stretch factor must be >= 1");
    require(strip_width_over_a >= 0.0, "strip width must be non-negative");
  }
};

class EpsilonMap {
 public:
  EpsilonMap() = default;
  EpsilonMap(int nx, int ny, double dx, double dy, double x0, double y0, double fill = 1.0)
      : nx_(nx), ny_(ny), dx_(dx), dy_(dy), x0_(x0), y0_(y0),
        eps_(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), fill) {
    require(nx >= 1 && ny >= 1, "grid dimensions must be >= 1");
    require(dx > 0.0 && dy > 0.0, "grid spacing must be positive");
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  // Lower-left corner of pixel (0, 0).
  double x0() const { return x0_; }
  double y0() const { return y0_; }
  double width() const { return nx_ * dx_; }
  double height() const { return ny_ * dy_; }
  std::size_t size() const { return eps_.size(); }

  double x_center(int i) const { return x0_ + (i + 0.5) * dx_; }
  double y_center(int j) const { return y0_ + (j + 0.5) * dy_; }

  double& operator()(int i, int j) { return eps_[index(i, j)]; }
  double operator()(int i, int j) const { return eps_[index(i, j)]; }

  const std::vector<double>& values() const { return eps_; }
  std::vector<double>& values() { return eps_; }

  // Nearest-pixel lookup at a physical coordinate.
  double at(double x, double y) const {
    int i = std::clamp(static_cast<int>(std::floor((x - x0_) / dx_)), 0, nx_ - 1);
    int j = std::clamp(static_cast<int>(std::floor((y - y0_) / dy_)), 0, ny_ - 1);
    return (*this)(i, j);
  }

  bool contains(double x, double y) const {
    return x >= x0_ && x <= x0_ + width() && y >= y0_ && y <= y0_ + height();
  }

  bool operator==(const EpsilonMap&) const = default;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
  }

  int nx_ = 0;
  int ny_ = 0;
  double dx_ = 1.0;
  double dy_ = 1.0;
  double x0_ = 0.0;
  double y0_ = 0.0;
  std::vector<double> eps_;
};

namespace detail {

struct Disk {
  double x;
  double y;
};

inline constexpr int kSupersample = 16;

// Fraction of the pixel centered at (cx, cy) covered by a disk of radius r.
inline double disk_fraction(double cx, double cy, double dx, double dy, const Disk& d, double r) {
  const double half_diag = 0.5 * std::hypot(dx, dy);
  const double dist = std::hypot(cx - d.x, cy - d.y);
  if (dist + half_diag <= r) return 1.0;
  if (dist - half_diag >= r) return 0.0;
  const double r2 = r * r;
  int inside = 0;
  for (int sj = 0; sj < kSupersample; ++sj) {
    const double py = cy - 0.5 * dy + (sj + 0.5) * dy / kSupersample - d.y;
    for (int si = 0; si < kSupersample; ++si) {
      const double px = cx - 0.5 * dx + (si + 0.5) * dx / kSupersample - d.x;
      if (px * px + py * py <= r2) ++inside;
    }
  }
  return static_cast<double>(inside) / (kSupersample * kSupersample);
}

// Accumulates hole coverage into `air` (same layout as the map). Periodic
// directions get image disks so holes wrap across the cell edges.
inline void rasterize_disks(const EpsilonMap& grid, std::vector<double>& air, const std::vector<Disk>& disks,
                            double r, bool periodic_x, bool periodic_y) {
  if (r <= 0.0) return;
  const double lx = grid.width();
  const double ly = grid.height();
  std::vector<Disk> all;
  all.reserve(disks.size() * 4);
  for (const Disk& d : disks) {
    for (int sx = -1; sx <= 1; ++sx) {
      if (sx != 0 && !periodic_x) continue;
      for (int sy = -1; sy <= 1; ++sy) {
        if (sy != 0 && !periodic_y) continue;
        all.push_back({d.x + sx * lx, d.y + sy * ly});
      }
    }
  }
  const double pad = r + std::hypot(grid.dx(), grid.dy());
  for (const Disk& d : all) {
    const int i0 = std::max(0, static_cast<int>(std::floor((d.x - pad - grid.x0()) / grid.dx())));
    const int i1 = std::min(grid.nx() - 1, static_cast<int>(std::ceil((d.x + pad - grid.x0()) / grid.dx())));
    const int j0 = std::max(0, static_cast<int>(std::floor((d.y - pad - grid.y0()) / grid.dy())));
    const int j1 = std::min(grid.ny() - 1, static_cast<int>(std::ceil((d.y + pad - grid.y0()) / grid.dy())));
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const double f = disk_fraction(grid.x_center(i), grid.y_center(j), grid.dx(), grid.dy(), d, r);
        if (f > 0.0) {
          double& cell = air[static_cast<std::size_t>(j) * grid.nx() + i];
          cell = std::min(1.0, cell + f);
        }
      }
    }
  }
}

inline void apply_fill(EpsilonMap& grid, const std::vector<double>& air, const LatticeSpec& spec) {
  const double eps_slab = spec.n_slab * spec.n_slab;
  const double eps_hole = spec.n_hole * spec.n_hole;
  auto& v = grid.values();
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = air[k] * eps_hole + (1.0 - air[k]) * eps_slab;
}

// Copies the lower half onto the upper half so eps(x, y) == eps(x, -y) bitwise.
inline void symmetrize_y(EpsilonMap& grid) {
  for (int j = 0; j < grid.ny() / 2; ++j) {
    const int jm = grid.ny() - 1 - j;
    for (int i = 0; i < grid.nx(); ++i) grid(i, jm) = grid(i, j);
  }
}

inline double overlap_fraction(double lo, double hi, double a, double b) {
  const double w = std::max(0.0, std::min(hi, b) - std::max(lo, a));
  return w / (hi - lo);
}

}  // namespace detail

inline constexpr int kMinUnitCellResolution = 8;

// Rectangular a x sqrt(3)a cell of the triangular lattice: holes at the
// origin corner and at the cell center.
inline EpsilonMap build_unit_cell(const LatticeSpec& spec, int resolution) {
  spec.validate();
  if (resolution < kMinUnitCellResolution)
    throw InvalidArgument("unit-cell resolution must be >= " + std::to_string(kMinUnitCellResolution) +
                          " pixels per lattice constant");
  const double ly = std::sqrt(3.0) * spec.a;
  const int nx = resolution;
  const int ny = static_cast<int>(std::lround(std::sqrt(3.0) * resolution));
  EpsilonMap grid(nx, ny, spec.a / nx, ly / ny, 0.0, 0.0);
  std::vector<double> air(grid.size(), 0.0);
  detail::rasterize_disks(grid, air, {{0.0, 0.0}, {0.5 * spec.a, 0.5 * ly}}, spec.radius(), true, true);
  detail::apply_fill(grid, air, spec);
  return grid;
}

// Number of row pitches spanned by a W1 supercell. The period carries one row
// more than 2R+1 so the triangular stacking stays consistent across the
// periodic boundary; that boundary row is shared by the two halves.
inline int w1_supercell_row_pitches(int rows_per_side) { return 2 * rows_per_side + 2; }

// One lattice period along x, centered on the line defect at y = 0.
inline EpsilonMap build_w1_supercell(const LatticeSpec& spec, int rows_per_side, int resolution) {
  spec.validate();
  require(rows_per_side >= 3, "W1 supercell needs at least 3 rows per side");
  if (resolution < kMinUnitCellResolution)
    throw InvalidArgument("supercell resolution must be >= " + std::to_string(kMinUnitCellResolution));
  const double h = spec.row_pitch();
  const int pitches = w1_supercell_row_pitches(rows_per_side);
  const double ly = pitches * h;
  const int nx = resolution;
  // Even pixel count keeps y = 0 on a pixel edge.
  int ny = static_cast<int>(std::lround(ly / spec.a * resolution));
  if (ny % 2 != 0) ++ny;
  EpsilonMap grid(nx, ny, spec.a / nx, ly / ny, -0.5 * spec.a, -0.5 * ly);
  std::vector<detail::Disk> disks;
  for (int row = -rows_per_side; row <= rows_per_side + 1; ++row) {
    if (row == 0) continue;
    const double x = (std::abs(row) % 2 == 1) ? 0.5 * spec.a : 0.0;
    disks.push_back({x, row * h});
  }
  std::vector<double> air(grid.size(), 0.0);
  detail::rasterize_disks(grid, air, disks, spec.radius(), true, true);
  detail::apply_fill(grid, air, spec);
  detail::symmetrize_y(grid);
  return grid;
}

struct DeviceOptions {
  double margin_a = 2.0;         // padding on every side, in lattice constants (hosts the PML)
  std::size_t max_cells = 20'000'000;
};

// Section boundaries of a finite device along x, in nm.
struct DeviceExtents {
  double x_begin = 0.0;
  double mirror_end = 0.0;   // = slow section start
  double slow_end = 0.0;     // = coupler start, reflector hole position
  double coupler_end = 0.0;  // crystal ends, strip waveguide begins
  double x_end = 0.0;
  double half_height = 0.0;
};

inline DeviceExtents device_extents(const LatticeSpec& spec, const WaveguideLayout& layout,
                                    const DeviceOptions& opt = {}) {
  DeviceExtents e;
  const double a = spec.a;
  const double margin = opt.margin_a * a;
  e.x_begin = 0.0;
  e.mirror_end = margin + layout.mirror_holes * a;
  e.slow_end = e.mirror_end + layout.slow_periods * a;
  e.coupler_end = e.slow_end + layout.coupler_periods * layout.stretch_factor * a;
  e.x_end = e.coupler_end + layout.strip_periods * a + margin;
  const double strip_w = layout.strip_width_over_a > 0.0 ? layout.strip_width_over_a * a
                                                         : (std::sqrt(3.0) - 2.0 * spec.r_over_a) * a;
  const int per_side = layout.crystal_rows > 0 ? (layout.crystal_rows - 1) / 2 : 0;
  const double core = per_side > 0 ? (per_side + 0.5) * spec.row_pitch() : 0.5 * strip_w + a;
  e.half_height = core + margin;
  return e;
}

// Finite device: end mirror, slow-light W1 section, stretched step coupler and
// an output strip waveguide. Margins extend the outermost sections so the PML
// sits over matching material.
inline EpsilonMap build_finite_device(const LatticeSpec& spec, const WaveguideLayout& layout, int resolution,
                                      const DeviceOptions& opt = {}) {
  spec.validate();
  layout.validate();
  require(resolution >= kMinUnitCellResolution, "device resolution must be >= 8");
  const DeviceExtents ext = device_extents(spec, layout, opt);
  const double a = spec.a;
  const double d = a / resolution;
  const int nx = static_cast<int>(std::ceil((ext.x_end - ext.x_begin) / d));
  int ny = static_cast<int>(std::ceil(2.0 * ext.half_height / d));
  if (ny % 2 != 0) ++ny;
  if (static_cast<double>(nx) * ny > static_cast<double>(opt.max_cells))
    throw ResourceError("device grid " + std::to_string(nx) + "x" + std::to_string(ny) +
                        " exceeds the configured cell limit of " + std::to_string(opt.max_cells));
  EpsilonMap grid(nx, ny, d, d, ext.x_begin, -0.5 * ny * d);

  const double strip_w = layout.strip_width_over_a > 0.0 ? layout.strip_width_over_a * a
                                                         : (std::sqrt(3.0) - 2.0 * spec.r_over_a) * a;
  const bool any_crystal = layout.crystal_rows > 0 &&
                           (layout.mirror_holes + layout.slow_periods + layout.coupler_periods) > 0;
  // With no output strip the last crystal section runs into the right margin.
  double crystal_end = any_crystal ? ext.coupler_end : ext.x_begin;
  if (any_crystal && layout.strip_periods == 0) crystal_end = ext.x_end;

  std::vector<double> air(grid.size(), 0.0);
  for (int j = 0; j < ny; ++j) {
    const double ylo = grid.y0() + j * d;
    const double fy = detail::overlap_fraction(ylo, ylo + d, -1e300, -0.5 * strip_w) +
                      detail::overlap_fraction(ylo, ylo + d, 0.5 * strip_w, 1e300);
    for (int i = 0; i < nx; ++i) {
      const double xlo = grid.x0() + i * d;
      const double fx = detail::overlap_fraction(xlo, xlo + d, crystal_end, 1e300);
      air[static_cast<std::size_t>(j) * nx + i] = fx * fy;
    }
  }

  if (any_crystal && spec.r_over_a > 0.0) {
    const int per_side = (layout.crystal_rows - 1) / 2;
    const double h = spec.row_pitch();
    const double r = spec.radius();
    std::vector<detail::Disk> disks;
    auto add_column_pair = [&](double x_even, double x_odd, bool center_row) {
      for (int row = -per_side; row <= per_side; ++row) {
        if (row == 0 && !center_row) continue;
        disks.push_back({(std::abs(row) % 2 == 1) ? x_odd : x_even, row * h});
      }
    };
    const double margin = opt.margin_a * a;
    // Leftmost section repeats into the left margin.
    const bool left_is_mirror = layout.mirror_holes > 0;
    const bool left_is_slow = !left_is_mirror && layout.slow_periods > 0;
    const int pad_periods = static_cast<int>(std::ceil(margin / a)) + 1;
    if (left_is_mirror || left_is_slow) {
      for (int p = 1; p <= pad_periods; ++p) {
        const double x = ext.mirror_end - (left_is_mirror ? layout.mirror_holes : 0) * a - p * a;
        add_column_pair(x, x + 0.5 * a, left_is_mirror);
      }
    }
    for (int p = 0; p < layout.mirror_holes; ++p) {
      const double x = margin + p * a;
      add_column_pair(x, x + 0.5 * a, true);
    }
    for (int p = 0; p < layout.slow_periods; ++p) {
      const double x = ext.mirror_end + p * a;
      add_column_pair(x, x + 0.5 * a, false);
    }
    const double sa = layout.stretch_factor * a;
    for (int p = 0; p < layout.coupler_periods; ++p) {
      const double x = ext.slow_end + p * sa;
      add_column_pair(x, x + 0.5 * sa, false);
    }
    if (layout.strip_periods == 0) {
      // Continue the last section through the right margin.
      const bool right_is_coupler = layout.coupler_periods > 0;
      const double period = right_is_coupler ? sa : a;
      const double start = right_is_coupler ? ext.coupler_end : ext.slow_end;
      const bool center = !right_is_coupler && layout.slow_periods == 0;
      for (int p = 0; p <= pad_periods; ++p) {
        const double x = start + p * period;
        add_column_pair(x, x + 0.5 * period, center);
      }
    }
    if (layout.reflector_hole) disks.push_back({ext.slow_end, 0.0});
    detail::rasterize_disks(grid, air, disks, r, false, false);
  }
  detail::apply_fill(grid, air, spec);
  return grid;
}

// Air (hole) area fraction of a map, counting intermediate pixels by weight.
inline double air_fraction(const EpsilonMap& grid, const LatticeSpec& spec) {
  const double es = spec.n_slab * spec.n_slab;
  const double eh = spec.n_hole * spec.n_hole;
  double sum = 0.0;
  for (double e : grid.values()) sum += (es - e) / (es - eh);
  return sum / static_cast<double>(grid.size());
}

}  // namespace erpcw
