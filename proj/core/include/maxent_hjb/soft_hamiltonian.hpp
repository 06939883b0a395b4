#pragma once

#include <optional>
#include <vector>

#include "maxent_hjb/dynamics.hpp"
#include "maxent_hjb/quadrature.hpp"

namespace maxent_hjb {

struct HamiltonianReport {
  double value = 0.0;
  std::optional<Vector> gradient_p;
  std::optional<Matrix> hessian_p;
  /// log sum_i w_i exp(-(L_i - L_min) / alpha).
  double log_partition = 0.0;
};

enum class Derivatives { None, Gradient, Hessian };

/// f(x, u_i) and r(x, u_i) at every quadrature node, for one fixed state x.
/// Reusing them lets many costates be evaluated at the same x cheaply.
struct NodeSamples {
  Matrix f;  ///< n x N
  Vector r;  ///< N
};

/// The soft Hamiltonian H_alpha(x, p) = alpha log int_U exp(-(p.f + r) / alpha) du
/// evaluated by tensorized quadrature, together with its p-derivatives, the
/// Boltzmann minimizer and the hard Hamiltonian H_0.
class SoftHamiltonian {
 public:
  SoftHamiltonian(DynamicsModel model, RunningCost running, double alpha, QuadratureGrid grid);

  const DynamicsModel& model() const { return model_; }
  const RunningCost& running() const { return running_; }
  double alpha() const { return alpha_; }
  const QuadratureGrid& grid() const { return grid_; }
  int state_dim() const { return model_.state_dim(); }

  SoftHamiltonian with_alpha(double alpha) const;
  SoftHamiltonian with_grid(QuadratureGrid grid) const;

  NodeSamples sample(const Vector& x) const;

  double value(const Vector& x, const Vector& p) const;
  double value(const NodeSamples& samples, const Vector& p) const;
  HamiltonianReport evaluate(const Vector& x, const Vector& p,
                             Derivatives derivatives = Derivatives::None) const;
  HamiltonianReport evaluate(const NodeSamples& samples, const Vector& p,
                             Derivatives derivatives = Derivatives::None) const;

  /// Central differences of the value in x with step 1e-6 (1 + |x|).
  Vector gradient_x(const Vector& x, const Vector& p) const;

  /// Boltzmann density g_i at each grid node; sum_i w_i g_i = 1.
  Vector boltzmann_density(const Vector& x, const Vector& p) const;

  /// -min_u {p.f + r}: grid search followed by local golden-section refinement.
  double standard_value(const Vector& x, const Vector& p) const;

 private:
  DynamicsModel model_;
  RunningCost running_;
  double alpha_;
  QuadratureGrid grid_;
};

HamiltonianReport soft_hamiltonian(const DynamicsModel& model, const CostModel& cost,
                                   const Vector& x, const Vector& p, double alpha,
                                   const QuadratureGrid& grid,
                                   Derivatives derivatives = Derivatives::None);

Vector boltzmann_density(const DynamicsModel& model, const CostModel& cost, const Vector& x,
                         const Vector& p, double alpha, const QuadratureGrid& grid);

double standard_hamiltonian(const DynamicsModel& model, const CostModel& cost, const Vector& x,
                            const Vector& p, const QuadratureGrid& grid);

/// Grid differential entropy -sum_i w_i g_i log g_i of a density on the grid.
double grid_entropy(const QuadratureGrid& grid, const Vector& density);

struct LaplacePoint {
  double alpha;
  double h_alpha;  ///< H_alpha
  double h_tilde;  ///< H_alpha - alpha log|U|
};

/// Sweep of (alpha, H_alpha, H_alpha - alpha log|U|) along decreasing alphas.
std::vector<LaplacePoint> laplace_gap(const DynamicsModel& model, const CostModel& cost,
                                      const Vector& x, const Vector& p,
                                      const std::vector<double>& alphas,
                                      const QuadratureGrid& grid);

struct QuadratureCheck {
  double coarse;
  double fine;
  double relative_gap;
  bool converged;  ///< relative_gap <= 1e-6
};

/// Compares H_alpha on the grid against a grid with twice the nodes per axis.
QuadratureCheck check_quadrature_convergence(const SoftHamiltonian& ham, const Vector& x,
                                             const Vector& p);

}  // namespace maxent_hjb
