#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "maxent_hjb/rng.hpp"

namespace maxent_hjb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class QuadratureGrid;

/// Axis-aligned compact control set U = [lower, upper].
class ControlBox {
 public:
  ControlBox(Vector lower, Vector upper);
  /// The symmetric box [-half_width, half_width]^m.
  static ControlBox symmetric(int m, double half_width);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  double volume() const;
  bool contains(const Vector& u, double slack = 0.0) const;
  Vector clamp(const Vector& u) const;

 private:
  Vector lower_;
  Vector upper_;
};

/// Vector field f(x, u) of a controlled system, tagged by structural family.
class DynamicsModel {
 public:
  enum class Family { Generic, ControlAffine, Linear };

  using Field = std::function<Vector(const Vector& x, const Vector& u)>;
  using Drift = std::function<Vector(const Vector& x)>;
  using InputMap = std::function<Matrix(const Vector& x)>;
  /// f(x, u_j) for all columns u_j at once (m x N in, n x N out).
  using BatchField = std::function<Matrix(const Vector& x, const Matrix& controls)>;

  static DynamicsModel generic(int n, int m, Field f);
  static DynamicsModel control_affine(int n, int m, Drift f1, InputMap f2);
  static DynamicsModel linear(Matrix A, Matrix B);

  /// Attaches the one-sided Lipschitz constant L of x -> f(x, u).
  DynamicsModel& with_lipschitz(double L);
  /// Attaches a vectorized evaluator used by eval_columns (generic family).
  DynamicsModel& with_batch(BatchField batch);

  int state_dim() const { return n_; }
  int control_dim() const { return m_; }
  Family family() const { return family_; }
  std::optional<double> one_sided_lipschitz() const { return lipschitz_; }

  Vector eval(const Vector& x, const Vector& u) const;
  /// f(x, u_j) for every column u_j of `controls` (m x N); returns n x N.
  Matrix eval_columns(const Vector& x, const Matrix& controls) const;

  /// Linear family only.
  const Matrix& A() const;
  const Matrix& B() const;
  /// Control-affine pieces f1(x), f2(x); the linear family answers Ax and B.
  Vector drift(const Vector& x) const;
  Matrix input_map(const Vector& x) const;

 private:
  DynamicsModel(int n, int m, Family family) : n_(n), m_(m), family_(family) {}
  void check_dims(const Vector& x, const Vector& u) const;

  int n_;
  int m_;
  Family family_;
  Field field_;
  Drift f1_;
  InputMap f2_;
  BatchField batch_;
  Matrix A_;
  Matrix B_;
  std::optional<double> lipschitz_;
};

/// Running cost r(x, u).
class RunningCost {
 public:
  enum class Family { Generic, Quadratic };
  using Function = std::function<double(const Vector& x, const Vector& u)>;
  using BatchFunction = std::function<Vector(const Vector& x, const Matrix& controls)>;

  static RunningCost generic(Function r);
  /// Attaches a vectorized evaluator used by eval_columns (generic family).
  RunningCost& with_batch(BatchFunction batch);
  /// r = 1/2 x'Qx + 1/2 u'Ru, Q symmetric PSD and R symmetric PD.
  static RunningCost quadratic(Matrix Q, Matrix R);

  Family family() const { return family_; }
  double eval(const Vector& x, const Vector& u) const;
  /// r(x, u_j) for every column of `controls`.
  Vector eval_columns(const Vector& x, const Matrix& controls) const;
  const Matrix& Q() const { return Q_; }
  const Matrix& R() const { return R_; }

 private:
  explicit RunningCost(Family family) : family_(family) {}
  Family family_;
  Function fn_;
  BatchFunction batch_;
  Matrix Q_;
  Matrix R_;
};

/// Terminal cost q(x).
class TerminalCost {
 public:
  enum class Family { Generic, L1Norm, Quadratic };
  using Function = std::function<double(const Vector& x)>;

  static TerminalCost generic(Function q);
  static TerminalCost l1_norm();
  /// q = 1/2 x'Mx with M symmetric PD.
  static TerminalCost quadratic(Matrix M);
  static TerminalCost zero();

  Family family() const { return family_; }
  double eval(const Vector& x) const;
  const Matrix& M() const { return M_; }

 private:
  explicit TerminalCost(Family family) : family_(family) {}
  Family family_;
  Function fn_;
  Matrix M_;
};

struct CostModel {
  RunningCost running;
  TerminalCost terminal = TerminalCost::zero();
  double alpha = 1.0;
  double discount = 0.0;
  /// Finite horizon T; empty means the discounted infinite-horizon problem.
  std::optional<double> horizon;

  void validate() const;
};

/// Feedback law u ~ N(-Kx, Sigma).
class GaussianPolicy {
 public:
  GaussianPolicy(Matrix K, Matrix Sigma);

  const Matrix& gain() const { return K_; }
  const Matrix& covariance() const { return Sigma_; }
  int control_dim() const { return static_cast<int>(K_.rows()); }
  int state_dim() const { return static_cast<int>(K_.cols()); }

  Vector mean(const Vector& x) const { return -(K_ * x); }
  Vector sample(const Vector& x, RandomSource& rng) const;

 private:
  Matrix K_;
  Matrix Sigma_;
  Matrix chol_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  /// controls[k] is the realization applied on [times[k], times[k+1]).
  std::vector<Vector> controls;
  std::uint64_t seed = 0;

  std::size_t size() const { return times.size(); }
  void append(double t, const Vector& x, const Vector& u);
  void append(const Trajectory& tail, bool skip_first);
};

/// Writes `t,x_0..x_{n-1},u_0..u_{m-1}` CSV with 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

/// Stateful explicit-Euler integrator of x_{k+1} = x_k + h f(x_k, u_k).
class SampledSimulator {
 public:
  SampledSimulator(const DynamicsModel& model, Vector x0, double substep,
                   std::uint64_t seed,
                   double divergence_bound = std::numeric_limits<double>::infinity());

  const Vector& state() const { return x_; }
  double time() const { return static_cast<double>(step_) * h_; }
  std::size_t step_index() const { return step_; }
  double substep() const { return h_; }
  RandomSource& rng() { return rng_; }

  Vector sample_control(const GaussianPolicy& policy) { return policy.sample(x_, rng_); }
  /// Applies u for one substep; throws DivergedTrajectory on a non-finite state.
  void advance(const Vector& u);

 private:
  const DynamicsModel* model_;
  Vector x_;
  double h_;
  std::size_t step_ = 0;
  double bound_;
  RandomSource rng_;
};

struct SimulationOptions {
  /// Clamp sampled controls into this box before applying them.
  std::optional<ControlBox> clamp;
};

Vector eval_dynamics(const DynamicsModel& model, const Vector& x, const Vector& u);

/// Mean drift of the relaxed system under a Gaussian policy.
Vector relaxed_drift(const DynamicsModel& model, const Vector& x,
                     const GaussianPolicy& policy);

/// Sampled-control approximation with inner step dt^2; records every substep.
Trajectory simulate_sampled(const DynamicsModel& model, const GaussianPolicy& policy,
                            const Vector& x0, double dt, std::size_t steps,
                            std::uint64_t seed, const SimulationOptions& options = {});

/// 1/2 log det(2 pi e Sigma).
double gaussian_entropy(const Matrix& Sigma);

/// D_KL(mu || uniform on U) = log|U| - H(mu).
double kl_from_uniform(double entropy, const ControlBox& box);

struct CostOptions {
  double dt = 0.1;  ///< sampling interval; inner Euler step is dt^2
  /// Required for Generic running costs (truncated-Gaussian quadrature over U).
  const QuadratureGrid* grid = nullptr;
  /// Infinite horizon: the truncated tail must be below this.
  double truncation_tol = 1e-6;
  /// Bound M_r on |integrand|; estimated from the initial state when empty.
  std::optional<double> integrand_bound;
};

struct CostEstimate {
  double value = 0.0;
  double tail_bound = 0.0;  ///< 0 in finite-horizon mode
  double horizon = 0.0;     ///< integration horizon actually used
  double entropy_integral = 0.0;  ///< int e^{-lambda s} H(g) ds over the horizon
};

/// Expected running cost of the Gaussian policy at x minus alpha H(policy).
double soft_running_cost(const RunningCost& running, double alpha,
                         const GaussianPolicy& policy, const Vector& x,
                         const QuadratureGrid* grid = nullptr);

CostEstimate evaluate_cost(const DynamicsModel& model, const CostModel& cost,
                           const GaussianPolicy& policy, const Vector& x0,
                           std::uint64_t seed, const CostOptions& options = {});

}  // namespace maxent_hjb
