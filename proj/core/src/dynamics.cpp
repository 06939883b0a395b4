#include "maxent_hjb/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "maxent_hjb/errors.hpp"
#include "maxent_hjb/quadrature.hpp"

namespace maxent_hjb {

namespace {

void require_dim(const char* what, Eigen::Index got, Eigen::Index want) {
  if (got != want) {
    std::ostringstream os;
    os << what << ": expected dimension " << want << ", got " << got;
    throw DimensionMismatch(os.str());
  }
}

bool is_symmetric(const Matrix& S, double rel_tol) {
  if (S.rows() != S.cols()) return false;
  const double scale = std::max(S.norm(), 1e-300);
  return (S - S.transpose()).norm() <= rel_tol * scale;
}

}  // namespace

// ---------------------------------------------------------------------------
// ControlBox

ControlBox::ControlBox(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0)
    throw DimensionMismatch("ControlBox: lower/upper must be nonempty and of equal size");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i]))
      throw InvalidArgument("ControlBox: lower[i] < upper[i] violated");
  }
}

ControlBox ControlBox::symmetric(int m, double half_width) {
  return ControlBox(Vector::Constant(m, -half_width), Vector::Constant(m, half_width));
}

double ControlBox::volume() const { return (upper_ - lower_).prod(); }

bool ControlBox::contains(const Vector& u, double slack) const {
  if (u.size() != lower_.size()) return false;
  return ((u.array() >= lower_.array() - slack) && (u.array() <= upper_.array() + slack)).all();
}

Vector ControlBox::clamp(const Vector& u) const {
  return u.cwiseMax(lower_).cwiseMin(upper_);
}

// ---------------------------------------------------------------------------
// DynamicsModel

DynamicsModel DynamicsModel::generic(int n, int m, Field f) {
  if (n < 1 || m < 1) throw InvalidArgument("DynamicsModel: dimensions must be positive");
  DynamicsModel model(n, m, Family::Generic);
  model.field_ = std::move(f);
  return model;
}

DynamicsModel DynamicsModel::control_affine(int n, int m, Drift f1, InputMap f2) {
  if (n < 1 || m < 1) throw InvalidArgument("DynamicsModel: dimensions must be positive");
  DynamicsModel model(n, m, Family::ControlAffine);
  model.f1_ = std::move(f1);
  model.f2_ = std::move(f2);
  return model;
}

DynamicsModel DynamicsModel::linear(Matrix A, Matrix B) {
  if (A.rows() != A.cols()) throw DimensionMismatch("DynamicsModel: A must be square");
  if (B.rows() != A.rows()) throw DimensionMismatch("DynamicsModel: B must have n rows");
  DynamicsModel model(static_cast<int>(A.rows()), static_cast<int>(B.cols()), Family::Linear);
  model.A_ = std::move(A);
  model.B_ = std::move(B);
  return model;
}

DynamicsModel& DynamicsModel::with_lipschitz(double L) {
  lipschitz_ = L;
  return *this;
}

DynamicsModel& DynamicsModel::with_batch(BatchField batch) {
  if (family_ != Family::Generic) throw UnsupportedFamily("with_batch: only generic models take a batch evaluator");
  batch_ = std::move(batch);
  return *this;
}

void DynamicsModel::check_dims(const Vector& x, const Vector& u) const {
  require_dim("dynamics state", x.size(), n_);
  require_dim("dynamics control", u.size(), m_);
}

Vector DynamicsModel::eval(const Vector& x, const Vector& u) const {
  check_dims(x, u);
  switch (family_) {
    case Family::Linear:
      return A_ * x + B_ * u;
    case Family::ControlAffine:
      return f1_(x) + f2_(x) * u;
    case Family::Generic:
      break;
  }
  Vector out = field_(x, u);
  require_dim("dynamics output", out.size(), n_);
  return out;
}

Matrix DynamicsModel::eval_columns(const Vector& x, const Matrix& controls) const {
  require_dim("dynamics state", x.size(), n_);
  require_dim("dynamics control", controls.rows(), m_);
  switch (family_) {
    case Family::Linear:
      return (B_ * controls).colwise() + A_ * x;
    case Family::ControlAffine:
      return (f2_(x) * controls).colwise() + f1_(x);
    case Family::Generic:
      break;
  }
  if (batch_) {
    Matrix out = batch_(x, controls);
    if (out.rows() != n_ || out.cols() != controls.cols())
      throw DimensionMismatch("dynamics batch output has the wrong shape");
    return out;
  }
  Matrix out(n_, controls.cols());
  Vector u(m_);
  for (Eigen::Index j = 0; j < controls.cols(); ++j) {
    u = controls.col(j);
    out.col(j) = field_(x, u);
  }
  return out;
}

const Matrix& DynamicsModel::A() const {
  if (family_ != Family::Linear) throw UnsupportedFamily("A(): model is not linear");
  return A_;
}

const Matrix& DynamicsModel::B() const {
  if (family_ != Family::Linear) throw UnsupportedFamily("B(): model is not linear");
  return B_;
}

Vector DynamicsModel::drift(const Vector& x) const {
  require_dim("dynamics state", x.size(), n_);
  if (family_ == Family::Linear) return A_ * x;
  if (family_ == Family::ControlAffine) return f1_(x);
  throw UnsupportedFamily("drift(): generic model has no control-affine split");
}

Matrix DynamicsModel::input_map(const Vector& x) const {
  require_dim("dynamics state", x.size(), n_);
  if (family_ == Family::Linear) return B_;
  if (family_ == Family::ControlAffine) return f2_(x);
  throw UnsupportedFamily("input_map(): generic model has no control-affine split");
}

// ---------------------------------------------------------------------------
// Costs

RunningCost RunningCost::generic(Function r) {
  RunningCost cost(Family::Generic);
  cost.fn_ = std::move(r);
  return cost;
}

RunningCost& RunningCost::with_batch(BatchFunction batch) {
  batch_ = std::move(batch);
  return *this;
}

RunningCost RunningCost::quadratic(Matrix Q, Matrix R) {
  if (!is_symmetric(Q, 1e-12)) throw InvalidArgument("RunningCost: Q must be symmetric");
  if (!is_symmetric(R, 1e-12)) throw InvalidArgument("RunningCost: R must be symmetric");
  if (Eigen::LLT<Matrix>(R).info() != Eigen::Success)
    throw NotPositiveDefinite("RunningCost: R must be positive definite");
  RunningCost cost(Family::Quadratic);
  cost.Q_ = std::move(Q);
  cost.R_ = std::move(R);
  return cost;
}

double RunningCost::eval(const Vector& x, const Vector& u) const {
  if (family_ == Family::Quadratic) {
    require_dim("running cost state", x.size(), Q_.rows());
    require_dim("running cost control", u.size(), R_.rows());
    return 0.5 * x.dot(Q_ * x) + 0.5 * u.dot(R_ * u);
  }
  return fn_(x, u);
}

Vector RunningCost::eval_columns(const Vector& x, const Matrix& controls) const {
  Vector out(controls.cols());
  if (family_ == Family::Quadratic) {
    require_dim("running cost state", x.size(), Q_.rows());
    require_dim("running cost control", controls.rows(), R_.rows());
    const double state_part = 0.5 * x.dot(Q_ * x);
    out = (0.5 * (controls.array() * (R_ * controls).array()).colwise().sum()).transpose();
    out.array() += state_part;
    return out;
  }
  if (batch_) {
    out = batch_(x, controls);
    if (out.size() != controls.cols()) throw DimensionMismatch("running cost batch output length");
    return out;
  }
  Vector u(controls.rows());
  for (Eigen::Index j = 0; j < controls.cols(); ++j) {
    u = controls.col(j);
    out[j] = fn_(x, u);
  }
  return out;
}

TerminalCost TerminalCost::generic(Function q) {
  TerminalCost cost(Family::Generic);
  cost.fn_ = std::move(q);
  return cost;
}

TerminalCost TerminalCost::l1_norm() { return TerminalCost(Family::L1Norm); }

TerminalCost TerminalCost::quadratic(Matrix M) {
  if (!is_symmetric(M, 1e-12)) throw InvalidArgument("TerminalCost: M must be symmetric");
  if (Eigen::LLT<Matrix>(M).info() != Eigen::Success)
    throw NotPositiveDefinite("TerminalCost: M must be positive definite");
  TerminalCost cost(Family::Quadratic);
  cost.M_ = std::move(M);
  return cost;
}

TerminalCost TerminalCost::zero() {
  return generic([](const Vector&) { return 0.0; });
}

double TerminalCost::eval(const Vector& x) const {
  switch (family_) {
    case Family::L1Norm:
      return x.lpNorm<1>();
    case Family::Quadratic:
      require_dim("terminal cost state", x.size(), M_.rows());
      return 0.5 * x.dot(M_ * x);
    case Family::Generic:
      break;
  }
  return fn_(x);
}

void CostModel::validate() const {
  if (!(alpha > 0.0)) throw InvalidArgument("CostModel: temperature alpha must be > 0");
  if (!(discount >= 0.0)) throw InvalidArgument("CostModel: discount lambda must be >= 0");
  if (horizon && !(*horizon > 0.0)) throw InvalidArgument("CostModel: horizon T must be > 0");
}

// ---------------------------------------------------------------------------
// GaussianPolicy

GaussianPolicy::GaussianPolicy(Matrix K, Matrix Sigma) : K_(std::move(K)), Sigma_(std::move(Sigma)) {
  if (Sigma_.rows() != Sigma_.cols() || Sigma_.rows() != K_.rows())
    throw DimensionMismatch("GaussianPolicy: Sigma must be m x m with m = rows(K)");
  if (!is_symmetric(Sigma_, 1e-12))
    throw InvalidArgument("GaussianPolicy: covariance must be symmetric");
  Eigen::LLT<Matrix> llt(Sigma_);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("GaussianPolicy: covariance is not positive definite");
  chol_ = llt.matrixL();
  // Reject matrices whose Cholesky succeeded only numerically.
  if (chol_.diagonal().minCoeff() <= 0.0)
    throw NotPositiveDefinite("GaussianPolicy: covariance is not positive definite");
}

Vector GaussianPolicy::sample(const Vector& x, RandomSource& rng) const {
  Vector z(K_.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean(x) + chol_ * z;
}

// ---------------------------------------------------------------------------
// Trajectory

void Trajectory::append(double t, const Vector& x, const Vector& u) {
  if (!times.empty() && !(t > times.back()))
    throw InvalidArgument("Trajectory: times must be strictly increasing");
  times.push_back(t);
  states.push_back(x);
  controls.push_back(u);
}

void Trajectory::append(const Trajectory& tail, bool skip_first) {
  for (std::size_t k = skip_first ? 1 : 0; k < tail.size(); ++k)
    append(tail.times[k], tail.states[k], tail.controls[k]);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
  const Eigen::Index m = traj.controls.empty() ? 0 : traj.controls.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x_" << i;
  for (Eigen::Index i = 0; i < m; ++i) os << ",u_" << i;
  os << '\n';
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t k = 0; k < traj.size(); ++k) {
    put(traj.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) {
      os << ',';
      put(traj.states[k][i]);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      os << ',';
      put(traj.controls[k][i]);
    }
    os << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_trajectory_csv(os, traj);
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw FormatError(path + ": empty trajectory file");
  int n = 0, m = 0;
  {
    std::stringstream header(line);
    std::string col;
    std::getline(header, col, ',');
    if (col != "t") throw FormatError(path + ": header must start with t");
    while (std::getline(header, col, ',')) {
      if (col.rfind("x_", 0) == 0) ++n;
      else if (col.rfind("u_", 0) == 0) ++m;
      else throw FormatError(path + ": unexpected column " + col);
    }
  }
  Trajectory traj;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<int>(vals.size()) != 1 + n + m) throw FormatError(path + ": ragged row");
    Vector x(n), u(m);
    for (int i = 0; i < n; ++i) x[i] = vals[1 + i];
    for (int i = 0; i < m; ++i) u[i] = vals[1 + n + i];
    traj.append(vals[0], x, u);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Simulation

SampledSimulator::SampledSimulator(const DynamicsModel& model, Vector x0, double substep,
                                   std::uint64_t seed, double divergence_bound)
    : model_(&model), x_(std::move(x0)), h_(substep), bound_(divergence_bound), rng_(seed) {
  if (!(substep > 0.0)) throw InvalidArgument("SampledSimulator: substep must be > 0");
  require_dim("initial state", x_.size(), model.state_dim());
}

void SampledSimulator::advance(const Vector& u) {
  x_ += h_ * model_->eval(x_, u);
  ++step_;
  if (!x_.allFinite() || x_.norm() > bound_) {
    std::ostringstream os;
    os << "trajectory diverged at step " << step_;
    throw DivergedTrajectory(os.str(), step_);
  }
}

Vector eval_dynamics(const DynamicsModel& model, const Vector& x, const Vector& u) {
  return model.eval(x, u);
}

Vector relaxed_drift(const DynamicsModel& model, const Vector& x, const GaussianPolicy& policy) {
  if (model.family() == DynamicsModel::Family::Generic)
    throw UnsupportedFamily("relaxed_drift: mean drift has no closed form for a generic model");
  require_dim("policy state", policy.state_dim(), model.state_dim());
  require_dim("policy control", policy.control_dim(), model.control_dim());
  return model.drift(x) + model.input_map(x) * policy.mean(x);
}

Trajectory simulate_sampled(const DynamicsModel& model, const GaussianPolicy& policy,
                            const Vector& x0, double dt, std::size_t steps, std::uint64_t seed,
                            const SimulationOptions& options) {
  if (!(dt > 0.0)) throw InvalidArgument("simulate_sampled: dt must be > 0");
  require_dim("policy state", policy.state_dim(), model.state_dim());
  require_dim("policy control", policy.control_dim(), model.control_dim());
  SampledSimulator sim(model, x0, dt * dt, seed);
  Trajectory traj;
  traj.seed = seed;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.controls.reserve(steps + 1);
  for (std::size_t k = 0;; ++k) {
    Vector u = sim.sample_control(policy);
    if (options.clamp) u = options.clamp->clamp(u);
    traj.times.push_back(sim.time());
    traj.states.push_back(sim.state());
    traj.controls.push_back(u);
    if (k == steps) break;
    sim.advance(u);
  }
  return traj;
}

double gaussian_entropy(const Matrix& Sigma) {
  if (Sigma.rows() != Sigma.cols()) throw DimensionMismatch("gaussian_entropy: Sigma must be square");
  if (!is_symmetric(Sigma, 1e-12)) throw InvalidArgument("gaussian_entropy: Sigma must be symmetric");
  Eigen::LLT<Matrix> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("gaussian_entropy: Sigma is not positive definite");
  const Matrix L = llt.matrixL();
  const double log_det = 2.0 * L.diagonal().array().log().sum();
  const double m = static_cast<double>(Sigma.rows());
  return 0.5 * (m * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det);
}

double kl_from_uniform(double entropy, const ControlBox& box) {
  return std::log(box.volume()) - entropy;
}

// ---------------------------------------------------------------------------
// Cost evaluation

namespace {

// E_g[r(x, u)] under the policy density restricted to the grid's box.
double truncated_expectation(const RunningCost& running, const GaussianPolicy& policy,
                             const Vector& x, const QuadratureGrid& grid) {
  const Vector mu = policy.mean(x);
  const Eigen::LLT<Matrix> llt(policy.covariance());
  const Matrix centered = grid.nodes().colwise() - mu;
  const Matrix white = llt.matrixL().solve(centered);
  const Vector log_density = -0.5 * white.colwise().squaredNorm().transpose();
  const Vector log_w = grid.log_weights() + log_density;
  const double shift = log_w.maxCoeff();
  const Vector w = (log_w.array() - shift).exp();
  const Vector r = running.eval_columns(x, grid.nodes());
  return w.dot(r) / w.sum();
}

}  // namespace

double soft_running_cost(const RunningCost& running, double alpha, const GaussianPolicy& policy,
                         const Vector& x, const QuadratureGrid* grid) {
  double expected = 0.0;
  if (running.family() == RunningCost::Family::Quadratic) {
    const Matrix& R = running.R();
    const Vector Kx = policy.gain() * x;
    expected = 0.5 * x.dot(running.Q() * x) + 0.5 * (R * policy.covariance()).trace() +
               0.5 * Kx.dot(R * Kx);
  } else {
    if (grid == nullptr)
      throw InvalidArgument("evaluate_cost: generic running cost needs a quadrature grid");
    expected = truncated_expectation(running, policy, x, *grid);
  }
  return expected - alpha * gaussian_entropy(policy.covariance());
}

CostEstimate evaluate_cost(const DynamicsModel& model, const CostModel& cost,
                           const GaussianPolicy& policy, const Vector& x0, std::uint64_t seed,
                           const CostOptions& options) {
  cost.validate();
  if (!(options.dt > 0.0)) throw InvalidArgument("evaluate_cost: dt must be > 0");
  const double lambda = cost.discount;
  const double entropy = gaussian_entropy(policy.covariance());
  auto integrand = [&](const Vector& x) {
    return soft_running_cost(cost.running, cost.alpha, policy, x, options.grid);
  };

  CostEstimate est;
  double T = 0.0;
  double bound = 0.0;
  if (cost.horizon) {
    T = *cost.horizon;
  } else {
    if (!(lambda > 0.0))
      throw InvalidArgument("evaluate_cost: infinite horizon requires discount lambda > 0");
    if (!(options.truncation_tol > 0.0))
      throw InvalidArgument("evaluate_cost: truncation_tol must be > 0");
    if (options.integrand_bound) {
      bound = *options.integrand_bound;
    } else {
      // State part at x0 plus the state-independent part; valid for stabilizing policies.
      const Vector zero = Vector::Zero(x0.size());
      const double constant = integrand(zero);
      bound = std::abs(integrand(x0) - constant) + std::abs(constant);
    }
    bound = std::max(bound, 1e-300);
    T = std::max(std::log(bound / (lambda * options.truncation_tol)) / lambda, options.dt * options.dt);
  }

  const double h_nominal = options.dt * options.dt;
  const auto steps = static_cast<std::size_t>(std::ceil(T / h_nominal - 1e-9));
  const double h = T / static_cast<double>(std::max<std::size_t>(steps, 1));
  SampledSimulator sim(model, x0, h, seed);
  double value = 0.0;
  double entropy_integral = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double weight = std::exp(-lambda * sim.time()) * h;
    value += weight * integrand(sim.state());
    entropy_integral += weight * entropy;
    sim.advance(sim.sample_control(policy));
  }
  if (cost.horizon) {
    // The terminal term carries the same discount as the integrand at s = T.
    value += std::exp(-lambda * T) * cost.terminal.eval(sim.state());
  } else {
    est.tail_bound = bound * std::exp(-lambda * T) / lambda;
  }
  est.value = value;
  est.horizon = T;
  est.entropy_integral = entropy_integral;
  return est;
}

}  // namespace maxent_hjb
