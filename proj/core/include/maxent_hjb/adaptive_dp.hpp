#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "maxent_hjb/dynamics.hpp"
#include "maxent_hjb/lq_maxent.hpp"

namespace maxent_hjb {

/// How the window time-integrals are approximated from the substep samples.
/// Both pair a state with the control held over the substep it bounds:
/// Left uses the substep's start only, Trapezoid averages both ends.
enum class WindowQuadrature { Left, Trapezoid };

enum class Exploration { Gaussian, Sinusoid };

/// Sum-of-sines exploration e(t) = a sum_k sin(w_k t) per control channel,
/// frequencies drawn independently per channel from U(-w_bar, w_bar).
class SinusoidalExploration {
 public:
  SinusoidalExploration(double amplitude, double omega_bar, int n_terms, int channels,
                        std::uint64_t seed);
  /// Explicit frequencies: row c holds channel c's frequencies.
  SinusoidalExploration(double amplitude, Matrix frequencies);

  Vector operator()(double t) const;
  const Matrix& frequencies() const { return freq_; }

 private:
  double a_;
  Matrix freq_;
};

SinusoidalExploration sinusoidal_baseline(double amplitude, double omega_bar, int n_terms,
                                          int channels, std::uint64_t seed);

struct LearnerConfig {
  double window = 0.01;  ///< delta t
  int n_sub = 10;        ///< substeps per window; the simulator step is window / n_sub
  double eps_stop = 1e-3;
  int max_iters = 50;
  std::uint64_t seed = 0;
  double rank_tol = 1e-8;
  /// Windows tried per regression before RankStall.
  int window_budget_factor = 50;
  double horizon = 500.0;  ///< simulated time for the cost and settling metrics
  double settling_band = 1.0;
  double divergence_bound = 1e8;
  WindowQuadrature quadrature = WindowQuadrature::Trapezoid;
  Exploration exploration = Exploration::Gaussian;
  double sinusoid_amplitude = 0.5;
  double sinusoid_omega_bar = 100.0;
  int sinusoid_terms = 100;
  /// Keep every substep of the run in LearnerReport::trajectory.
  bool record_trajectory = false;
};

/// Substep samples of one window: n_sub + 1 equally spaced times.
/// controls[k] is the control held on [times[k], times[k+1]).
struct WindowSegment {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> controls;
};

struct OnPolicyRows {
  Matrix theta;  ///< l x (n(n+1)/2 + mn)
  Vector xi;     ///< l
  int windows_used = 0;

  void append(const Vector& theta_row, double xi_value);
};

/// i1 columns are x_a x_b at a * n + b; i2 columns are x_a u_c at a * m + c.
struct OffPolicyRows {
  Matrix delta;  ///< l x n(n+1)/2
  Matrix i1;     ///< l x n^2
  Matrix i2;     ///< l x mn
  int windows_used = 0;

  void append(const Vector& delta_row, const Vector& i1_row, const Vector& i2_row);
};

/// Endpoint regressors: e^{-lambda t} x_a x_b for a <= b, doubled off the diagonal.
Vector svec_quadratic(const Vector& x);

/// Number of unknowns n(n+1)/2 + mn.
int unknown_count(int n, int m);

/// One on-policy row. The K_{k+1} block pairs with vec(K) (column-major,
/// index j * m + i). lambda is the discount.
std::pair<Vector, double> collect_onpolicy_window(const WindowSegment& seg, const Matrix& K,
                                                  const Matrix& Q, const Matrix& R,
                                                  double lambda,
                                                  WindowQuadrature rule = WindowQuadrature::Trapezoid);

struct OffPolicyRow {
  Vector delta;
  Vector i1;
  Vector i2;
};
OffPolicyRow collect_offpolicy_window(const WindowSegment& seg, double lambda,
                                      WindowQuadrature rule = WindowQuadrature::Trapezoid);

struct PolicyPair {
  Matrix P;
  Matrix K;
};

/// Least squares for (svec P, vec K_{k+1}); RankDeficient unless theta has
/// full column rank.
PolicyPair solve_onpolicy(const OnPolicyRows& rows, int n, int m, double rank_tol = 1e-8);

/// The off-policy equation for the current K_k, reusing the same data rows.
PolicyPair solve_offpolicy(const OffPolicyRows& rows, const Matrix& K, const Matrix& Q,
                           const Matrix& R, double rank_tol = 1e-8);

/// Rank of (i1 reduced to a <= b columns, i2).
int offpolicy_rank(const OffPolicyRows& rows, int n, double rank_tol = 1e-8);

struct LearnerIterate {
  Matrix P;
  Matrix K_next;
};

struct LearnerReport {
  std::vector<LearnerIterate> iterates;
  std::vector<int> samples_per_iter;
  int total_samples = 0;
  double learning_time = 0.0;
  double settling_time = 0.0;
  double total_running_cost = 0.0;
  bool converged = false;
  Matrix final_P;
  Matrix final_K;
  std::optional<Trajectory> trajectory;
};

/// Model-free on-policy learning. The problem's (A, B) drive only the
/// simulated plant, stepped exactly under zero-order hold; the learner sees Q, R, lambda, alpha and the sampled data.
/// After convergence the rest of the horizon runs under u = -Kx.
LearnerReport run_onpolicy(const LqProblem& system, const Matrix& K0, const Vector& x0,
                           const LearnerConfig& config);

/// Collects once under N(-K0 x, alpha R^-1) until the rank condition holds,
/// then iterates on the stored rows.
LearnerReport run_offpolicy(const LqProblem& system, const Matrix& K0, const Vector& x0,
                            const LearnerConfig& config);

/// Earliest sample time after which max_i |x_i| <= band; +inf if never.
double settling_time(const Trajectory& traj, double band);

}  // namespace maxent_hjb
