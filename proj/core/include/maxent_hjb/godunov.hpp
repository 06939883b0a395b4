#pragma once

#include <functional>
#include <vector>

#include "maxent_hjb/dynamics.hpp"
#include "maxent_hjb/grid2d.hpp"
#include "maxent_hjb/soft_hamiltonian.hpp"

namespace maxent_hjb {

/// Dimension-by-dimension Godunov numerical Hamiltonian for a 2-D state.
/// Coordinate 1 is extremized with p_2 held at the midpoint of its interval,
/// then coordinate 2 with p_1 at that extremizer. The result is H_alpha at
/// the extremizing pair, so flux(x, p, p) is exactly H_alpha(x, p).
double godunov_flux(const SoftHamiltonian& ham, const NodeSamples& cell,
                    const Eigen::Vector2d& p_minus, const Eigen::Vector2d& p_plus);
double godunov_flux(const SoftHamiltonian& ham, const Vector& x_cell,
                    const Eigen::Vector2d& p_minus, const Eigen::Vector2d& p_plus);

/// Explicit first-order Godunov scheme for W_t + H_alpha(x, grad W) = 0 on a
/// Grid2D, with the per-node quadrature samples cached.
class GodunovScheme {
 public:
  GodunovScheme(const SoftHamiltonian& ham, const Grid2D& grid);

  const Grid2D& grid() const { return grid_; }

  /// cfl * min(dx, dy) / max |grad_p H|_1, with the max taken over the grid
  /// at the central and both one-sided gradients of W. Infinite when H does
  /// not depend on p.
  double stable_step(const Eigen::MatrixXd& W, double cfl) const;

  /// One forward-Euler step; linear-extrapolation ghost cells.
  Eigen::MatrixXd step(const Eigen::MatrixXd& W, double dt) const;

 private:
  const SoftHamiltonian& ham_;
  Grid2D grid_;
  std::vector<NodeSamples> samples_;  // index i * ny + j
};

/// W(T, .) from W(0, .) = q. The step is refreshed every 50 steps and the
/// last step is shortened to land on T.
GridFunction godunov_solve(const SoftHamiltonian& ham, const TerminalCost& q, const Grid2D& grid,
                           double T, double cfl = 0.5);

struct Comparison {
  double max_abs_diff;
  double sup_norm_b;
  double rel_pct;  ///< 100 * max_abs_diff / sup_norm_b
};

/// Compares a against b sampled at every node of a's grid. margin_fraction
/// crops that fraction of each extent from every side (0 keeps all nodes).
Comparison compare_solutions(const GridFunction& a,
                             const std::function<double(double x, double y)>& b, double b_time,
                             double margin_fraction = 0.0);
Comparison compare_solutions(const GridFunction& a, const GridFunction& b,
                             double margin_fraction = 0.0);

}  // namespace maxent_hjb
