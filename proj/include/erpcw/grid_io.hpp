#pragma once

// Binary and CSV persistence for EpsilonMap and field snapshots.
//
// Binary layout (little-endian):
//   char[8]  magic "ERPCWGRD"
//   u32      version (1)
//   u32      length of quantity name, followed by the name bytes ("eps", "Ey", ...)
//   i32 nx, i32 ny
//   f64 dx, dy, x0, y0      [nm]
//   f64[nx*ny]              row-major, x fastest

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "erpcw/errors.hpp"
#include "erpcw/geometry.hpp"

namespace erpcw {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

inline constexpr std::array<char, 8> kGridMagic = {'E', 'R', 'P', 'C', 'W', 'G', 'R', 'D'};
inline constexpr std::uint32_t kGridVersion = 1;

namespace detail {

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw InvalidArgument("unexpected end of binary stream");
  return v;
}

}  // namespace detail

inline void write_grid_binary(std::ostream& os, const EpsilonMap& grid, const std::string& quantity = "eps") {
  os.write(kGridMagic.data(), kGridMagic.size());
  detail::write_pod(os, kGridVersion);
  detail::write_pod(os, static_cast<std::uint32_t>(quantity.size()));
  os.write(quantity.data(), static_cast<std::streamsize>(quantity.size()));
  detail::write_pod(os, static_cast<std::int32_t>(grid.nx()));
  detail::write_pod(os, static_cast<std::int32_t>(grid.ny()));
  detail::write_pod(os, grid.dx());
  detail::write_pod(os, grid.dy());
  detail::write_pod(os, grid.x0());
  detail::write_pod(os, grid.y0());
  os.write(reinterpret_cast<const char*>(grid.values().data()),
           static_cast<std::streamsize>(grid.size() * sizeof(double)));
}

struct NamedGrid {
  std::string quantity;
  EpsilonMap grid;
};

inline NamedGrid read_grid_binary(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kGridMagic) throw InvalidArgument("not an erpcw grid file (bad magic)");
  const auto version = detail::read_pod<std::uint32_t>(is);
  if (version != kGridVersion) throw InvalidArgument("unsupported grid file version " + std::to_string(version));
  const auto name_len = detail::read_pod<std::uint32_t>(is);
  if (name_len > 256) throw InvalidArgument("grid quantity name too long");
  std::string name(name_len, '\0');
  is.read(name.data(), name_len);
  const auto nx = detail::read_pod<std::int32_t>(is);
  const auto ny = detail::read_pod<std::int32_t>(is);
  const auto dx = detail::read_pod<double>(is);
  const auto dy = detail::read_pod<double>(is);
  const auto x0 = detail::read_pod<double>(is);
  const auto y0 = detail::read_pod<double>(is);
  EpsilonMap grid(nx, ny, dx, dy, x0, y0);
  is.read(reinterpret_cast<char*>(grid.values().data()),
          static_cast<std::streamsize>(grid.size() * sizeof(double)));
  if (!is) throw InvalidArgument("grid file truncated");
  return {name, std::move(grid)};
}

// CSV: header line "nx,ny,dx_nm", a line with those values, then one line per
// grid row (y index), values along x.
inline void write_grid_csv(std::ostream& os, const EpsilonMap& grid) {
  os << "nx,ny,dx_nm\n" << grid.nx() << ',' << grid.ny() << ',' << std::setprecision(17) << grid.dx() << '\n';
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      if (i) os << ',';
      os << grid(i, j);
    }
    os << '\n';
  }
}

inline EpsilonMap read_grid_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("nx,ny,dx_nm", 0) != 0)
    throw InvalidArgument("grid CSV: missing 'nx,ny,dx_nm' header");
  int nx = 0, ny = 0;
  double dx = 0.0;
  char c1 = 0, c2 = 0;
  if (!std::getline(is, line)) throw InvalidArgument("grid CSV: missing dimensions");
  std::istringstream dims(line);
  dims >> nx >> c1 >> ny >> c2 >> dx;
  if (!dims || c1 != ',' || c2 != ',') throw InvalidArgument("grid CSV: malformed dimension line");
  EpsilonMap grid(nx, ny, dx, dx, 0.0, 0.0);
  for (int j = 0; j < ny; ++j) {
    if (!std::getline(is, line)) throw InvalidArgument("grid CSV: too few rows");
    std::istringstream row(line);
    for (int i = 0; i < nx; ++i) {
      std::string cell;
      if (!std::getline(row, cell, ',')) throw InvalidArgument("grid CSV: short row " + std::to_string(j));
      grid(i, j) = std::stod(cell);
    }
  }
  return grid;
}

inline void save_grid_binary(const std::string& path, const EpsilonMap& grid, const std::string& quantity = "eps") {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  write_grid_binary(os, grid, quantity);
}

inline NamedGrid load_grid_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path);
  return read_grid_binary(is);
}

}  // namespace erpcw
