#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>

namespace maxent_hjb {

/// Uniform tensor grid over [x_min, x_max] x [y_min, y_max] with nx x ny nodes.
class Grid2D {
 public:
  Grid2D(double x_min, double x_max, double y_min, double y_max, int nx, int ny);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double dx() const { return (x_max_ - x_min_) / (nx_ - 1); }
  double dy() const { return (y_max_ - y_min_) / (ny_ - 1); }
  double x(int i) const { return i == nx_ - 1 ? x_max_ : x_min_ + i * dx(); }
  double y(int j) const { return j == ny_ - 1 ? y_max_ : y_min_ + j * dy(); }
  Eigen::Vector2d point(int i, int j) const { return {x(i), y(j)}; }

  bool operator==(const Grid2D& other) const = default;

 private:
  double x_min_, x_max_, y_min_, y_max_;
  int nx_, ny_;
};

/// Node values on a Grid2D at a given time; values(i, j) sits at (x_i, y_j).
struct GridFunction {
  Grid2D grid;
  Eigen::MatrixXd values;
  double time = 0.0;

  GridFunction(Grid2D g, Eigen::MatrixXd v, double t);
};

/// Rows `x,y,W`, x-index outer, 17 significant digits.
void write_grid_csv(std::ostream& os, const GridFunction& fn, const char* value_name = "W");
void write_grid_csv(const std::string& path, const GridFunction& fn, const char* value_name = "W");

/// Binary dump: 32-byte header (8-byte magic "MEHJBGF1", uint64 nx, uint64 ny,
/// float64 time) followed by nx*ny float64 values in row-major (x-index outer)
/// order. The grid extents are not stored and must be supplied on load.
void write_grid_binary(const std::string& path, const GridFunction& fn);
GridFunction read_grid_binary(const std::string& path, double x_min, double x_max, double y_min,
                              double y_max);

}  // namespace maxent_hjb
