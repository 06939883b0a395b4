#include "maxent_hjb/godunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "maxent_hjb/errors.hpp"
#include "maxent_hjb/optimize.hpp"
#include "maxent_hjb/parallel.hpp"

namespace maxent_hjb {

namespace {

constexpr int kGoldenIterations = 40;
constexpr int kRefreshEvery = 50;

// Extremizes coordinate d of p over the Godunov interval [a, b] (a = p_minus,
// b = p_plus) with the other coordinate fixed. H is convex in p, so the
// maximum sits at an endpoint and the minimum is interior only when the
// partial derivative changes sign inside the interval.
double extremize(const SoftHamiltonian& ham, const NodeSamples& cell, Vector& p, int d, double a,
                 double b) {
  if (a == b) return a;
  auto h_at = [&](double c) {
    p[d] = c;
    return ham.value(cell, p);
  };
  if (a > b) {
    const double ha = h_at(a);
    const double hb = h_at(b);
    return ha >= hb ? a : b;
  }
  p[d] = a;
  if ((*ham.evaluate(cell, p, Derivatives::Gradient).gradient_p)[d] >= 0.0) return a;
  p[d] = b;
  if ((*ham.evaluate(cell, p, Derivatives::Gradient).gradient_p)[d] <= 0.0) return b;
  return golden_section_minimize(h_at, a, b, kGoldenIterations).x;
}

}  // namespace

double godunov_flux(const SoftHamiltonian& ham, const NodeSamples& cell,
                    const Eigen::Vector2d& p_minus, const Eigen::Vector2d& p_plus) {
  if (ham.state_dim() != 2) throw DimensionMismatch("godunov_flux: state must be 2-D");
  Vector p(2);
  p[1] = 0.5 * (p_minus[1] + p_plus[1]);
  const double p1 = extremize(ham, cell, p, 0, p_minus[0], p_plus[0]);
  p[0] = p1;
  const double p2 = extremize(ham, cell, p, 1, p_minus[1], p_plus[1]);
  p[0] = p1;
  p[1] = p2;
  return ham.value(cell, p);
}

double godunov_flux(const SoftHamiltonian& ham, const Vector& x_cell,
                    const Eigen::Vector2d& p_minus, const Eigen::Vector2d& p_plus) {
  return godunov_flux(ham, ham.sample(x_cell), p_minus, p_plus);
}

GodunovScheme::GodunovScheme(const SoftHamiltonian& ham, const Grid2D& grid)
    : ham_(ham), grid_(grid) {
  if (ham.state_dim() != 2) throw DimensionMismatch("GodunovScheme: state must be 2-D");
  samples_.resize(static_cast<std::size_t>(grid.nx()) * grid.ny());
  parallel_for(0, static_cast<std::size_t>(grid.nx()), [&](std::size_t i) {
    for (int j = 0; j < grid.ny(); ++j) {
      samples_[i * grid.ny() + j] = ham.sample(Vector(grid.point(static_cast<int>(i), j)));
    }
  });
}

namespace {

// Values with one ring of linearly extrapolated ghost cells.
Eigen::MatrixXd pad(const Eigen::MatrixXd& W) {
  const Eigen::Index nx = W.rows(), ny = W.cols();
  Eigen::MatrixXd P(nx + 2, ny + 2);
  P.block(1, 1, nx, ny) = W;
  P.block(0, 1, 1, ny) = 2.0 * W.row(0) - W.row(1);
  P.block(nx + 1, 1, 1, ny) = 2.0 * W.row(nx - 1) - W.row(nx - 2);
  P.col(0) = 2.0 * P.col(1) - P.col(2);
  P.col(ny + 1) = 2.0 * P.col(ny) - P.col(ny - 1);
  return P;
}

}  // namespace

double GodunovScheme::stable_step(const Eigen::MatrixXd& W, double cfl) const {
  const Eigen::MatrixXd P = pad(W);
  const double dx = grid_.dx(), dy = grid_.dy();
  std::vector<double> row_max(static_cast<std::size_t>(grid_.nx()), 0.0);
  parallel_for(0, static_cast<std::size_t>(grid_.nx()), [&](std::size_t ri) {
    const int i = static_cast<int>(ri);
    double best = 0.0;
    for (int j = 0; j < grid_.ny(); ++j) {
      const double w = P(i + 1, j + 1);
      const double mx = (w - P(i, j + 1)) / dx, px = (P(i + 2, j + 1) - w) / dx;
      const double my = (w - P(i + 1, j)) / dy, py = (P(i + 1, j + 2) - w) / dy;
      const NodeSamples& cell = samples_[ri * grid_.ny() + j];
      for (const Eigen::Vector2d& g : {Eigen::Vector2d(mx, my), Eigen::Vector2d(px, py),
                                       Eigen::Vector2d(0.5 * (mx + px), 0.5 * (my + py))}) {
        const Vector gp = *ham_.evaluate(cell, Vector(g), Derivatives::Gradient).gradient_p;
        const double n1 = gp.lpNorm<1>();
        best = std::isnan(n1) ? std::numeric_limits<double>::infinity() : std::max(best, n1);
      }
    }
    row_max[ri] = best;
  });
  const double bound = *std::max_element(row_max.begin(), row_max.end());
  if (bound == 0.0) return std::numeric_limits<double>::infinity();
  return cfl * std::min(dx, dy) / bound;
}

Eigen::MatrixXd GodunovScheme::step(const Eigen::MatrixXd& W, double dt) const {
  if (W.rows() != grid_.nx() || W.cols() != grid_.ny())
    throw DimensionMismatch("GodunovScheme::step: field shape differs from the grid");
  const Eigen::MatrixXd P = pad(W);
  const double dx = grid_.dx(), dy = grid_.dy();
  Eigen::MatrixXd next(W.rows(), W.cols());
  parallel_for(0, static_cast<std::size_t>(grid_.nx()), [&](std::size_t ri) {
    const int i = static_cast<int>(ri);
    for (int j = 0; j < grid_.ny(); ++j) {
      const double w = P(i + 1, j + 1);
      const Eigen::Vector2d minus((w - P(i, j + 1)) / dx, (w - P(i + 1, j)) / dy);
      const Eigen::Vector2d plus((P(i + 2, j + 1) - w) / dx, (P(i + 1, j + 2) - w) / dy);
      next(i, j) = w - dt * godunov_flux(ham_, samples_[ri * grid_.ny() + j], minus, plus);
    }
  });
  return next;
}

GridFunction godunov_solve(const SoftHamiltonian& ham, const TerminalCost& q, const Grid2D& grid,
                           double T, double cfl) {
  if (!(T > 0.0)) throw InvalidArgument("godunov_solve: T must be > 0");
  if (!(cfl > 0.0 && cfl <= 0.9)) throw InvalidArgument("godunov_solve: cfl must lie in (0, 0.9]");
  const GodunovScheme scheme(ham, grid);
  Eigen::MatrixXd W(grid.nx(), grid.ny());
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) W(i, j) = q.eval(Vector(grid.point(i, j)));

  double t = 0.0;
  double dt = 0.0;
  for (long k = 0; t < T; ++k) {
    if (k % kRefreshEvery == 0) {
      dt = scheme.stable_step(W, cfl);
      if (!(dt > 0.0)) throw Error("godunov_solve: CFL step estimate is zero");
    }
    const double h = std::min(dt, T - t);
    W = scheme.step(W, h);
    t = h == T - t ? T : t + h;
  }
  return GridFunction(grid, std::move(W), T);
}

Comparison compare_solutions(const GridFunction& a,
                             const std::function<double(double x, double y)>& b, double b_time,
                             double margin_fraction) {
  if (std::abs(a.time - b_time) > 1e-9) throw InvalidArgument("compare_solutions: time stamps differ");
  if (!(margin_fraction >= 0.0 && margin_fraction < 0.5))
    throw InvalidArgument("compare_solutions: margin_fraction must lie in [0, 0.5)");
  const Grid2D& g = a.grid;
  const double mx = margin_fraction * (g.x_max() - g.x_min());
  const double my = margin_fraction * (g.y_max() - g.y_min());
  Comparison c{0.0, 0.0, 0.0};
  for (int i = 0; i < g.nx(); ++i) {
    const double x = g.x(i);
    if (x < g.x_min() + mx - 1e-12 || x > g.x_max() - mx + 1e-12) continue;
    for (int j = 0; j < g.ny(); ++j) {
      const double y = g.y(j);
      if (y < g.y_min() + my - 1e-12 || y > g.y_max() - my + 1e-12) continue;
      const double bv = b(x, y);
      c.max_abs_diff = std::max(c.max_abs_diff, std::abs(a.values(i, j) - bv));
      c.sup_norm_b = std::max(c.sup_norm_b, std::abs(bv));
    }
  }
  c.rel_pct = c.sup_norm_b > 0.0 ? 100.0 * c.max_abs_diff / c.sup_norm_b
                                 : (c.max_abs_diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  return c;
}

Comparison compare_solutions(const GridFunction& a, const GridFunction& b, double margin_fraction) {
  if (!(a.grid == b.grid)) throw DimensionMismatch("compare_solutions: grids differ");
  const Grid2D& g = a.grid;
  auto lookup = [&](double x, double y) {
    const int i = static_cast<int>(std::lround((x - g.x_min()) / g.dx()));
    const int j = static_cast<int>(std::lround((y - g.y_min()) / g.dy()));
    return b.values(i, j);
  };
  return compare_solutions(a, lookup, b.time, margin_fraction);
}

}  // namespace maxent_hjb
