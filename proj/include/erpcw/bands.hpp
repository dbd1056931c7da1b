#pragma once

// Plane-wave expansion for 2D TE Bloch modes (in-plane E, out-of-plane H).
//
// The master equation  -div( eps^-1 grad Hz ) = (w/c)^2 Hz  is expanded on
// plane waves exp(i (k+G).r). In units of 2 pi / Lx the matrix elements are
//   M[G, G'] = (k+G).(k+G') * eta[G - G'],
// which is Hermitian because eps is real. Eigenvalues are (Lx / lambda)^2.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "erpcw/constants.hpp"
#include "erpcw/errors.hpp"
#include "erpcw/geometry.hpp"
#include "erpcw/parallel.hpp"

namespace erpcw {

// Bloch wavevector in units of 2 pi / Lx, where Lx is the cell period along x.
struct BlochVector {
  double kx = 0.0;
  double ky = 0.0;
};

enum class Parity { unknown, even, odd, mixed };

inline const char* to_string(Parity p) {
  switch (p) {
    case Parity::even: return "even";
    case Parity::odd: return "odd";
    case Parity::mixed: return "mixed";
    default: return "unknown";
  }
}

// How eps^-1 enters the matrix. `direct` uses the Fourier series of 1/eps and
// is a Rayleigh-Ritz projection, so eigenvalues decrease monotonically with
// the basis size. `inverse` inverts the Toeplitz matrix of eps (Ho, Chan and
// Soukoulis) and converges faster for fields crossing sharp interfaces.
enum class EpsilonRule { direct, inverse };

struct PlaneWaveBasis {
  std::vector<std::pair<int, int>> harmonics;  // (m, n): G = (m / Lx, n / Ly) in units of 2 pi
  double lx = 1.0;  // cell size [nm]
  double ly = 1.0;
  double x_ref = 0.0;  // physical origin of the expansion [nm]
  double y_ref = 0.0;

  std::size_t size() const { return harmonics.size(); }
  double gx(std::size_t i) const { return harmonics[i].first / 1.0; }                 // 2 pi / Lx units
  double gy(std::size_t i) const { return harmonics[i].second * (lx / ly); }          // 2 pi / Lx units
};

struct ModeSet {
  Eigen::MatrixXcd coefficients;  // basis x n_bands, unit-norm columns
};

struct BandDiagram {
  std::vector<BlochVector> k_points;
  Eigen::MatrixXd bands;  // [THz], band x k, ascending in band at each k
  double period_nm = 0.0;  // Lx, the unit of k
  std::vector<Parity> parity;       // per band, filled by classify_guided_modes
  Eigen::MatrixXd mirror_overlap;   // band x k, filled by classify_guided_modes
  std::optional<PlaneWaveBasis> basis;
  std::vector<ModeSet> modes;       // per k, present when eigenvectors were kept

  int n_bands() const { return static_cast<int>(bands.rows()); }
  int n_k() const { return static_cast<int>(bands.cols()); }
};

struct BandSolverOptions {
  EpsilonRule rule = EpsilonRule::inverse;
  bool keep_modes = false;
  int jobs = 1;
};

namespace detail {

// Eigen's kissfft backend does not handle length-1 transforms.
template <class In>
void fft_forward(Eigen::FFT<double>& fft, std::vector<std::complex<double>>& out, const std::vector<In>& in) {
  if (in.size() == 1) {
    out.assign(1, std::complex<double>(in[0]));
    return;
  }
  fft.fwd(out, in);
}

}  // namespace detail

// Fourier coefficients c[m, n] = (1/N) sum_j f(r_j) exp(-i G.(r_j - r_ref)) of
// a sampled periodic function, for |m| <= mx, |n| <= my.
class FourierTable {
 public:
  FourierTable(const EpsilonMap& grid, const std::vector<double>& samples, int mx, int my,
               double x_ref, double y_ref)
      : mx_(mx), my_(my), coeffs_((2 * mx + 1) * (2 * my + 1)) {
    const int nx = grid.nx();
    const int ny = grid.ny();
    if (2 * mx >= nx && nx > 1) throw InvalidArgument("grid too coarse along x for the plane-wave cutoff");
    if (2 * my >= ny && ny > 1) throw InvalidArgument("grid too coarse along y for the plane-wave cutoff");
    Eigen::FFT<double> fft;
    // Transform rows (along x) then columns (along y).
    std::vector<std::complex<double>> plane(static_cast<std::size_t>(nx) * ny);
    {
      std::vector<double> row(nx);
      std::vector<std::complex<double>> out;
      for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) row[i] = samples[static_cast<std::size_t>(j) * nx + i];
        detail::fft_forward(fft, out, row);
        for (int i = 0; i < nx; ++i) plane[static_cast<std::size_t>(j) * nx + i] = out[i];
      }
    }
    std::vector<std::complex<double>> col(ny), out;
    const double norm = 1.0 / (static_cast<double>(nx) * ny);
    const double lx = grid.width();
    const double ly = grid.height();
    const double xs = grid.x_center(0) - x_ref;
    const double ys = grid.y_center(0) - y_ref;
    for (int m = -mx; m <= mx; ++m) {
      const int ix = ((m % nx) + nx) % nx;
      for (int j = 0; j < ny; ++j) col[j] = plane[static_cast<std::size_t>(j) * nx + ix];
      detail::fft_forward(fft, out, col);
      for (int n = -my; n <= my; ++n) {
        // A single sample along an axis means the function is uniform there.
        if ((nx == 1 && m != 0) || (ny == 1 && n != 0)) {
          coeffs_[index(m, n)] = 0.0;
          continue;
        }
        const int iy = ((n % ny) + ny) % ny;
        const double phase = -2.0 * kPi * (m * xs / lx + n * ys / ly);
        coeffs_[index(m, n)] = out[iy] * norm * std::polar(1.0, phase);
      }
    }
  }

  std::complex<double> operator()(int m, int n) const {
    if (std::abs(m) > mx_ || std::abs(n) > my_) return {0.0, 0.0};
    return coeffs_[index(m, n)];
  }

 private:
  std::size_t index(int m, int n) const {
    return static_cast<std::size_t>(n + my_) * (2 * mx_ + 1) + static_cast<std::size_t>(m + mx_);
  }
  int mx_;
  int my_;
  std::vector<std::complex<double>> coeffs_;
};

// Plane waves with |G| <= cutoff, cutoff in units of 2 pi / Lx.
inline PlaneWaveBasis make_basis(const EpsilonMap& cell, double cutoff) {
  PlaneWaveBasis b;
  b.lx = cell.width();
  b.ly = cell.height();
  b.x_ref = 0.0;
  b.y_ref = 0.0;
  const double ratio = b.lx / b.ly;
  const int mmax = static_cast<int>(std::floor(cutoff));
  const int nmax = static_cast<int>(std::floor(cutoff / ratio));
  for (int n = -nmax; n <= nmax; ++n)
    for (int m = -mmax; m <= mmax; ++m) {
      const double gx = m;
      const double gy = n * ratio;
      if (gx * gx + gy * gy <= cutoff * cutoff + 1e-12) b.harmonics.emplace_back(m, n);
    }
  return b;
}

namespace detail {

inline std::pair<int, int> basis_extent(const PlaneWaveBasis& b) {
  int mx = 0, my = 0;
  for (auto [m, n] : b.harmonics) {
    mx = std::max(mx, std::abs(m));
    my = std::max(my, std::abs(n));
  }
  return {mx, my};
}

// eta[G_i - G_j] as a dense matrix for the chosen rule.
inline Eigen::MatrixXcd inverse_eps_matrix(const EpsilonMap& cell, const PlaneWaveBasis& basis, EpsilonRule rule) {
  auto [mx, my] = basis_extent(basis);
  const std::size_t n = basis.size();
  Eigen::MatrixXcd mat(n, n);
  if (rule == EpsilonRule::direct) {
    std::vector<double> inv(cell.values().size());
    for (std::size_t k = 0; k < inv.size(); ++k) inv[k] = 1.0 / cell.values()[k];
    FourierTable table(cell, inv, 2 * mx, 2 * my, basis.x_ref, basis.y_ref);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        mat(i, j) = table(basis.harmonics[i].first - basis.harmonics[j].first,
                          basis.harmonics[i].second - basis.harmonics[j].second);
    return mat;
  }
  FourierTable table(cell, cell.values(), 2 * mx, 2 * my, basis.x_ref, basis.y_ref);
  Eigen::MatrixXcd eps(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      eps(i, j) = table(basis.harmonics[i].first - basis.harmonics[j].first,
                        basis.harmonics[i].second - basis.harmonics[j].second);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(eps);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("permittivity Toeplitz matrix is not positive definite");
  mat = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
  return mat;
}

}  // namespace detail

inline constexpr double kHermitianTolerance = 1e-10;

// Lowest n_bands TE eigenfrequencies at each k. Frequencies in THz use the
// cell width as the lattice period.
inline BandDiagram solve_te_bands(const EpsilonMap& cell, const std::vector<BlochVector>& k_path, int n_bands,
                                  double pw_cutoff, const BandSolverOptions& opt = {}) {
  require(pw_cutoff >= 3.0, "plane-wave cutoff must be >= 3");
  require(n_bands >= 1, "need at least one band");
  require(!k_path.empty(), "k path is empty");
  const PlaneWaveBasis basis = make_basis(cell, pw_cutoff);
  if (static_cast<std::size_t>(n_bands) > basis.size())
    throw InvalidArgument("requested " + std::to_string(n_bands) + " bands but basis has only " +
                          std::to_string(basis.size()) + " plane waves");
  const Eigen::MatrixXcd eta = detail::inverse_eps_matrix(cell, basis, opt.rule);
  const std::size_t n = basis.size();

  BandDiagram diag;
  diag.k_points = k_path;
  diag.bands.resize(n_bands, static_cast<Eigen::Index>(k_path.size()));
  diag.period_nm = cell.width();
  if (opt.keep_modes) {
    diag.basis = basis;
    diag.modes.resize(k_path.size());
  }

  parallel_for(k_path.size(), opt.jobs, [&](std::size_t ik) {
    const BlochVector& k = k_path[ik];
    Eigen::VectorXd qx(n), qy(n);
    for (std::size_t i = 0; i < n; ++i) {
      qx[i] = k.kx + basis.gx(i);
      qy[i] = k.ky + basis.gy(i);
    }
    Eigen::MatrixXcd m(n, n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) m(i, j) = (qx[i] * qx[j] + qy[i] * qy[j]) * eta(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        m, opt.keep_modes ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
      const double residual = (m - m.adjoint()).norm();
      throw NumericalError("Hermitian eigensolve failed at k=(" + std::to_string(k.kx) + "," +
                               std::to_string(k.ky) + ")",
                           residual);
    }
    const double scale = std::max(1.0, std::abs(es.eigenvalues().maxCoeff()));
    for (int b = 0; b < n_bands; ++b) {
      double lam = es.eigenvalues()[b];
      if (lam < -kHermitianTolerance * scale)
        throw NumericalError("negative eigenvalue " + std::to_string(lam) + " in TE operator", lam);
      lam = std::max(lam, 0.0);
      diag.bands(b, static_cast<Eigen::Index>(ik)) =
          normalized_to_thz(std::sqrt(lam), cell.width());
    }
    if (opt.keep_modes) diag.modes[ik].coefficients = es.eigenvectors().leftCols(n_bands);
  });
  return diag;
}

// Uniform kx samples in [k0, k1] at fixed ky.
inline std::vector<BlochVector> k_line(double k0, double k1, int count, double ky = 0.0) {
  require(count >= 1, "k line needs at least one point");
  std::vector<BlochVector> out(count);
  for (int i = 0; i < count; ++i)
    out[i] = {count == 1 ? k0 : k0 + (k1 - k0) * i / (count - 1), ky};
  return out;
}

// Gamma-X-S-Y-Gamma around the irreducible rectangle of a rectangular cell
// (ky in units of 2 pi / Lx, zone edge at 0.5 Lx / Ly).
inline std::vector<BlochVector> rectangular_zone_path(const EpsilonMap& cell, int per_segment) {
  const double kyx = 0.5 * cell.width() / cell.height();
  const BlochVector corners[] = {{0.0, 0.0}, {0.5, 0.0}, {0.5, kyx}, {0.0, kyx}, {0.0, 0.0}};
  std::vector<BlochVector> out;
  for (int s = 0; s < 4; ++s) {
    for (int i = 0; i < per_segment; ++i) {
      const double t = static_cast<double>(i) / per_segment;
      out.push_back({corners[s].kx + t * (corners[s + 1].kx - corners[s].kx),
                     corners[s].ky + t * (corners[s + 1].ky - corners[s].ky)});
    }
  }
  out.push_back(corners[4]);
  return out;
}

struct BandGap {
  double lo = 0.0;  // THz
  double hi = 0.0;
  bool empty() const { return !(hi > lo); }
  double width() const { return empty() ? 0.0 : hi - lo; }
  double midgap() const { return 0.5 * (lo + hi); }
};

// Gap between band `below` and band `below + 1` over the whole k set.
inline BandGap find_band_gap(const BandDiagram& d, int below) {
  require(below >= 0 && below + 1 < d.n_bands(), "band index out of range for gap search");
  return {d.bands.row(below).maxCoeff(), d.bands.row(below + 1).minCoeff()};
}

struct IndexedGap {
  int below = 0;
  BandGap gap;
};

// All non-empty gaps between consecutive bands, in band order.
inline std::vector<IndexedGap> find_band_gaps(const BandDiagram& d) {
  std::vector<IndexedGap> out;
  for (int b = 0; b + 1 < d.n_bands(); ++b) {
    BandGap g = find_band_gap(d, b);
    if (!g.empty()) out.push_back({b, g});
  }
  return out;
}

// Normalized mirror overlap <f, P f> / <f, f> of a field sampled on a grid
// that is symmetric about its y center (P: y -> -y).
inline double field_mirror_overlap(const std::vector<std::complex<double>>& field, int nx, int ny) {
  require(field.size() == static_cast<std::size_t>(nx) * ny, "field size does not match grid");
  std::complex<double> num = 0.0;
  double den = 0.0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const auto& f = field[static_cast<std::size_t>(j) * nx + i];
      const auto& g = field[static_cast<std::size_t>(ny - 1 - j) * nx + i];
      num += std::conj(f) * g;
      den += std::norm(f);
    }
  require(den > 0.0, "field is identically zero");
  return num.real() / den;
}

inline Parity parity_from_overlap(double overlap) {
  if (overlap >= 0.5) return Parity::even;
  if (overlap <= -0.5) return Parity::odd;
  return Parity::mixed;
}

// Labels each band even/odd by the mirror symmetry of Hz about y = 0 (Ey has
// the same parity). Requires eigenvectors kept by the solver. A band whose
// per-k labels disagree is reported as mixed.
inline BandDiagram classify_guided_modes(BandDiagram d) {
  require(d.basis.has_value() && d.modes.size() == d.k_points.size(),
          "band diagram has no stored eigenvectors");
  const PlaneWaveBasis& b = *d.basis;
  std::vector<std::size_t> mirror(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    auto it = std::find(b.harmonics.begin(), b.harmonics.end(),
                        std::make_pair(b.harmonics[i].first, -b.harmonics[i].second));
    mirror[i] = static_cast<std::size_t>(it - b.harmonics.begin());
  }
  d.mirror_overlap.resize(d.n_bands(), d.n_k());
  d.parity.assign(d.n_bands(), Parity::unknown);
  for (int ik = 0; ik < d.n_k(); ++ik) {
    const auto& c = d.modes[ik].coefficients;
    for (int band = 0; band < d.n_bands(); ++band) {
      std::complex<double> num = 0.0;
      double den = 0.0;
      for (std::size_t i = 0; i < b.size(); ++i) {
        num += std::conj(c(i, band)) * c(mirror[i], band);
        den += std::norm(c(i, band));
      }
      d.mirror_overlap(band, ik) = num.real() / den;
    }
  }
  for (int band = 0; band < d.n_bands(); ++band) {
    Parity p = parity_from_overlap(d.mirror_overlap(band, 0));
    for (int ik = 1; ik < d.n_k(); ++ik)
      if (parity_from_overlap(d.mirror_overlap(band, ik)) != p) p = Parity::mixed;
    d.parity[band] = p;
  }
  return d;
}

// One dispersion branch: frequency against k.
struct BandCurve {
  std::vector<double> k;   // 2 pi / Lx units
  std::vector<double> nu;  // THz
  double period_nm = 0.0;
};

inline BandCurve band_curve(const BandDiagram& d, int band) {
  require(band >= 0 && band < d.n_bands(), "band index out of range");
  BandCurve c;
  c.period_nm = d.period_nm;
  for (int ik = 0; ik < d.n_k(); ++ik) {
    c.k.push_back(d.k_points[ik].kx);
    c.nu.push_back(d.bands(band, ik));
  }
  return c;
}

// At each k, the lowest band of the requested parity inside (lo, hi). Points
// where no such band exists are skipped. Needs a classified diagram.
inline BandCurve guided_band(const BandDiagram& d, Parity want, const BandGap& window) {
  require(d.mirror_overlap.rows() == d.n_bands(), "diagram is not classified");
  BandCurve c;
  c.period_nm = d.period_nm;
  for (int ik = 0; ik < d.n_k(); ++ik) {
    for (int band = 0; band < d.n_bands(); ++band) {
      const double nu = d.bands(band, ik);
      if (nu <= window.lo || nu >= window.hi) continue;
      if (parity_from_overlap(d.mirror_overlap(band, ik)) != want) continue;
      c.k.push_back(d.k_points[ik].kx);
      c.nu.push_back(nu);
      break;
    }
  }
  return c;
}

struct GroupIndexCurve {
  std::vector<double> nu;  // THz
  std::vector<double> ng;
  std::vector<std::size_t> flagged;  // source indices dropped as band-edge singularities
};

// n_g = c / |d omega / dk| by second-order finite differences (central inside,
// one-sided three-point at the ends). Points where the slope vanishes below
// `slope_tol` (THz per unit k) are dropped and flagged.
inline GroupIndexCurve group_index(const BandCurve& band, double slope_tol = 1e-9) {
  const std::size_t n = band.k.size();
  require(n >= 3, "group index needs at least 3 k points");
  require(band.period_nm > 0.0, "band curve has no lattice period");
  GroupIndexCurve out;
  auto slope = [&](std::size_t i) {
    // Three-point Lagrange derivative at k[i] using the stencil (s0, s1, s2).
    std::size_t s0, s1, s2;
    if (i == 0) { s0 = 0; s1 = 1; s2 = 2; }
    else if (i == n - 1) { s0 = n - 3; s1 = n - 2; s2 = n - 1; }
    else { s0 = i - 1; s1 = i; s2 = i + 1; }
    const double x = band.k[i];
    const double x0 = band.k[s0], x1 = band.k[s1], x2 = band.k[s2];
    const double l0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
    const double l1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
    const double l2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
    return l0 * band.nu[s0] + l1 * band.nu[s1] + l2 * band.nu[s2];
  };
  // d(nu)/d(k) in THz per (2 pi / a): n_g = c / (a * dnu/dk).
  const double c_over_a_thz = kSpeedOfLight / (band.period_nm * 1e-9) * 1e-12;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = slope(i);
    if (std::abs(s) <= slope_tol) {
      out.flagged.push_back(i);
      continue;
    }
    out.nu.push_back(band.nu[i]);
    out.ng.push_back(c_over_a_thz / std::abs(s));
  }
  return out;
}

inline GroupIndexCurve group_index(const BandDiagram& d, int band, double slope_tol = 1e-9) {
  return group_index(band_curve(d, band), slope_tol);
}

// In-plane E field of a stored mode sampled at the centers of `grid` pixels
// (grid must be the cell the diagram was solved on). Returns (Ex, Ey) up to a
// common complex factor; E ~ (1/eps) curl(Hz z).
struct ModeField {
  int nx = 0;
  int ny = 0;
  std::vector<std::complex<double>> hz, ex, ey;
};

inline ModeField mode_field(const BandDiagram& d, const EpsilonMap& grid, int k_index, int band) {
  require(d.basis.has_value() && static_cast<std::size_t>(k_index) < d.modes.size(),
          "band diagram has no stored eigenvectors");
  require(band >= 0 && band < d.n_bands(), "band index out of range");
  const PlaneWaveBasis& b = *d.basis;
  const auto& c = d.modes[k_index].coefficients;
  const BlochVector k = d.k_points[k_index];
  ModeField f;
  f.nx = grid.nx();
  f.ny = grid.ny();
  const std::size_t npx = grid.size();
  f.hz.assign(npx, 0.0);
  f.ex.assign(npx, 0.0);
  f.ey.assign(npx, 0.0);
  const double two_pi_over_lx = 2.0 * kPi / b.lx;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double qx = (k.kx + b.gx(i)) * two_pi_over_lx;
    const double qy = (k.ky + b.gy(i)) * two_pi_over_lx;
    const std::complex<double> coef = c(i, band);
    for (int jy = 0; jy < grid.ny(); ++jy) {
      const double y = grid.y_center(jy) - b.y_ref;
      for (int jx = 0; jx < grid.nx(); ++jx) {
        const double x = grid.x_center(jx) - b.x_ref;
        const std::complex<double> w = coef * std::polar(1.0, qx * x + qy * y);
        const std::size_t p = static_cast<std::size_t>(jy) * grid.nx() + jx;
        f.hz[p] += w;
        f.ex[p] += std::complex<double>(0.0, qy) * w;
        f.ey[p] -= std::complex<double>(0.0, qx) * w;
      }
    }
  }
  for (std::size_t p = 0; p < npx; ++p) {
    f.ex[p] /= grid.values()[p];
    f.ey[p] /= grid.values()[p];
  }
  return f;
}

}  // namespace erpcw
