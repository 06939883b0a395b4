#include "maxent_hjb/grid2d.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "maxent_hjb/errors.hpp"

namespace maxent_hjb {

namespace {
constexpr char kMagic[8] = {'M', 'E', 'H', 'J', 'B', 'G', 'F', '1'};
}

Grid2D::Grid2D(double x_min, double x_max, double y_min, double y_max, int nx, int ny)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max), nx_(nx), ny_(ny) {
  if (nx < 8 || ny < 8) throw InvalidArgument("Grid2D: nx and ny must be >= 8");
  if (!(x_max > x_min) || !(y_max > y_min)) throw InvalidArgument("Grid2D: empty extent");
}

GridFunction::GridFunction(Grid2D g, Eigen::MatrixXd v, double t)
    : grid(g), values(std::move(v)), time(t) {
  if (values.rows() != grid.nx() || values.cols() != grid.ny())
    throw DimensionMismatch("GridFunction: values must be nx x ny");
  if (!values.allFinite()) throw Error("GridFunction: non-finite value");
}

void write_grid_csv(std::ostream& os, const GridFunction& fn, const char* value_name) {
  os << "x,y," << value_name << '\n';
  char buf[96];
  for (int i = 0; i < fn.grid.nx(); ++i) {
    for (int j = 0; j < fn.grid.ny(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", fn.grid.x(i), fn.grid.y(j),
                    fn.values(i, j));
      os << buf;
    }
  }
}

void write_grid_csv(const std::string& path, const GridFunction& fn, const char* value_name) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_grid_csv(os, fn, value_name);
}

void write_grid_binary(const std::string& path, const GridFunction& fn) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  const std::uint64_t nx = static_cast<std::uint64_t>(fn.grid.nx());
  const std::uint64_t ny = static_cast<std::uint64_t>(fn.grid.ny());
  os.write(kMagic, sizeof kMagic);
  os.write(reinterpret_cast<const char*>(&nx), sizeof nx);
  os.write(reinterpret_cast<const char*>(&ny), sizeof ny);
  os.write(reinterpret_cast<const char*>(&fn.time), sizeof fn.time);
  for (int i = 0; i < fn.grid.nx(); ++i) {
    for (int j = 0; j < fn.grid.ny(); ++j) {
      const double v = fn.values(i, j);
      os.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
}

GridFunction read_grid_binary(const std::string& path, double x_min, double x_max, double y_min,
                              double y_max) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  char magic[8];
  std::uint64_t nx = 0, ny = 0;
  double time = 0.0;
  is.read(magic, sizeof magic);
  is.read(reinterpret_cast<char*>(&nx), sizeof nx);
  is.read(reinterpret_cast<char*>(&ny), sizeof ny);
  is.read(reinterpret_cast<char*>(&time), sizeof time);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw FormatError(path + ": not a grid-function dump");
  Eigen::MatrixXd values(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(ny));
  for (std::uint64_t i = 0; i < nx; ++i) {
    for (std::uint64_t j = 0; j < ny; ++j) {
      double v = 0.0;
      is.read(reinterpret_cast<char*>(&v), sizeof v);
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  if (!is) throw FormatError(path + ": truncated grid-function dump");
  return GridFunction(Grid2D(x_min, x_max, y_min, y_max, static_cast<int>(nx), static_cast<int>(ny)),
                      std::move(values), time);
}

}  // namespace maxent_hjb
