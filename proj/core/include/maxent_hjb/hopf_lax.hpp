#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "maxent_hjb/dynamics.hpp"
#include "maxent_hjb/grid2d.hpp"
#include "maxent_hjb/soft_hamiltonian.hpp"

namespace maxent_hjb {

/// Bi-characteristic curve (gamma, p) on s in [0, t], stored forward in s.
/// Alongside the curve it keeps H, grad_p H and grad_x H at every sample,
/// which the Hopf-Lax running integrals reuse.
struct CharacteristicCurve {
  std::vector<double> s;
  std::vector<Vector> gamma;
  std::vector<Vector> costate;
  std::vector<double> hamiltonian;
  std::vector<Vector> grad_p;
  std::vector<Vector> grad_x;
  bool blown_up = false;
  double blow_up_s = std::numeric_limits<double>::quiet_NaN();
};

enum class HopfLaxForm { MinForm, MaxForm };

struct HopfLaxConfig {
  double ode_step = 0.05;
  int n_starts = 16;
  double start_radius = 5.0;
  int simplex_iters = 200;
  HopfLaxForm formula = HopfLaxForm::MinForm;
  std::uint64_t seed = 0;
  /// Curves whose state or costate norm exceeds this are discarded.
  double blow_up_norm = 1e8;
  /// Initial Nelder-Mead simplex edge.
  double simplex_step = 0.5;
  /// Extra start tried before the random ones (e.g. a neighbouring optimum).
  std::optional<Vector> warm_start;
  /// Simplex edge and iteration budget used around the warm start
  /// (0 iterations means simplex_iters).
  double warm_simplex_step = 0.1;
  int warm_simplex_iters = 0;
  /// Random starts per warm-started node in hopf_lax_surface; the first node
  /// of the sweep always uses n_starts.
  int surface_restarts = 0;
};

struct ValueEstimate {
  double value = 0.0;
  Vector argmin_v;
  Vector costate_at_t;
  double blown_up_fraction = 0.0;
  int curve_evaluations = 0;
};

/// Terminal data q of the initial-value problem plus what its Legendre
/// transform needs: the search box for generic q.
struct TerminalSpec {
  TerminalCost cost;
  std::optional<ControlBox> search_box;
  int search_nodes_per_dim = 201;
};

struct LegendreValue {
  double value;      ///< +infinity when the supremum is unbounded
  bool approximate;  ///< true for the grid maximization of a generic q
};

/// Fixed-step RK4 of d gamma/ds = grad_p H, dp/ds = -grad_x H from s = t
/// (gamma = x, p = v) back to s = 0. The number of steps is
/// max(4, ceil(t / ode_step)).
CharacteristicCurve integrate_characteristics(const SoftHamiltonian& ham, const Vector& x,
                                              const Vector& v, double t,
                                              const HopfLaxConfig& config);

/// q*(v) = sup_x {x.v - q(x)}.
LegendreValue legendre_transform(const TerminalSpec& q, const Vector& v);

/// W(t, x) of  W_t + H_alpha(x, grad W) = 0, W(0, .) = q  by the generalized
/// Hopf-Lax formula, optimizing over the terminal costate v with multi-start
/// Nelder-Mead.
ValueEstimate hopf_lax_value(const SoftHamiltonian& ham, const TerminalSpec& q, const Vector& x,
                             double t, const HopfLaxConfig& config);

/// Objective of the Hopf-Lax optimization for one costate v, as minimized
/// (the MaxForm objective is negated). +infinity for blown-up curves or an
/// infinite Legendre transform.
double hopf_lax_objective(const SoftHamiltonian& ham, const TerminalSpec& q, const Vector& x,
                          const Vector& v, double t, const HopfLaxConfig& config,
                          bool* blown_up = nullptr);

/// Boltzmann feedback density at x from the optimizing costate.
Vector synthesize_feedback(const SoftHamiltonian& ham, const ValueEstimate& estimate,
                           const Vector& x);

/// Draws a control from a density tabulated on ham's grid at state x:
/// inverse CDF over node cells for m = 1, rejection against uniform for m > 1.
Vector sample_feedback(const SoftHamiltonian& ham, const Vector& x, const Vector& costate,
                       const Vector& density, RandomSource& rng);

/// W(t, .) on a 2-D grid of (x_1, x_2); further coordinates are taken from
/// base_point. The first column is swept top-down, then every row left to
/// right, each node warm-started from its predecessor's optimum. The result
/// does not depend on the thread count.
GridFunction hopf_lax_surface(const SoftHamiltonian& ham, const TerminalSpec& q,
                              const Grid2D& grid, double t, const HopfLaxConfig& config,
                              const std::optional<Vector>& base_point = std::nullopt);

struct RecedingHorizonOptions {
  double dt = 0.1;                ///< sampling interval; Euler substep is dt^2
  double control_interval = 0.1;  ///< period between Hopf-Lax re-solves
  std::uint64_t seed = 0;
};

/// Closed-loop run on [0, total_T] built from successive windows of length
/// window_T. Inside a window the value W(T' - s, x) is re-solved every
/// control_interval; between re-solves the Boltzmann density is held and a
/// fresh control is sampled every substep.
Trajectory receding_horizon_control(const SoftHamiltonian& ham, const TerminalSpec& q,
                                    const Vector& x0, double total_T, double window_T,
                                    const HopfLaxConfig& config,
                                    const RecedingHorizonOptions& options = {});

/// Left-Riemann sum of r(x_k, u_k) over the trajectory's time steps.
double accumulated_running_cost(const Trajectory& traj, const RunningCost& running);

}  // namespace maxent_hjb
