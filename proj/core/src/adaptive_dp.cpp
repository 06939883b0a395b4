#include "maxent_hjb/adaptive_dp.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "maxent_hjb/errors.hpp"

namespace maxent_hjb {

SinusoidalExploration::SinusoidalExploration(double amplitude, double omega_bar, int n_terms,
                                             int channels, std::uint64_t seed)
    : a_(amplitude) {
  if (n_terms < 1) throw InvalidArgument("sinusoidal exploration: n_terms must be >= 1");
  if (channels < 1) throw InvalidArgument("sinusoidal exploration: channels must be >= 1");
  RandomSource rng(seed, 0x51u);
  freq_.resize(channels, n_terms);
  for (int c = 0; c < channels; ++c)
    for (int k = 0; k < n_terms; ++k) freq_(c, k) = rng.uniform(-omega_bar, omega_bar);
}

SinusoidalExploration::SinusoidalExploration(double amplitude, Matrix frequencies)
    : a_(amplitude), freq_(std::move(frequencies)) {
  if (freq_.rows() < 1 || freq_.cols() < 1)
    throw InvalidArgument("sinusoidal exploration: need at least one frequency per channel");
}

Vector SinusoidalExploration::operator()(double t) const {
  Vector e(freq_.rows());
  for (Eigen::Index c = 0; c < freq_.rows(); ++c) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < freq_.cols(); ++k) acc += std::sin(freq_(c, k) * t);
    e[c] = a_ * acc;
  }
  return e;
}

SinusoidalExploration sinusoidal_baseline(double amplitude, double omega_bar, int n_terms,
                                          int channels, std::uint64_t seed) {
  return SinusoidalExploration(amplitude, omega_bar, n_terms, channels, seed);
}

void OnPolicyRows::append(const Vector& theta_row, double xi_value) {
  if (windows_used > 0 && theta_row.size() != theta.cols())
    throw DimensionMismatch("OnPolicyRows: row length differs");
  theta.conservativeResize(windows_used + 1, theta_row.size());
  xi.conservativeResize(windows_used + 1);
  theta.row(windows_used) = theta_row.transpose();
  xi[windows_used] = xi_value;
  ++windows_used;
}

void OffPolicyRows::append(const Vector& delta_row, const Vector& i1_row, const Vector& i2_row) {
  if (windows_used > 0 && (delta_row.size() != delta.cols() || i1_row.size() != i1.cols() ||
                           i2_row.size() != i2.cols()))
    throw DimensionMismatch("OffPolicyRows: row length differs");
  delta.conservativeResize(windows_used + 1, delta_row.size());
  i1.conservativeResize(windows_used + 1, i1_row.size());
  i2.conservativeResize(windows_used + 1, i2_row.size());
  delta.row(windows_used) = delta_row.transpose();
  i1.row(windows_used) = i1_row.transpose();
  i2.row(windows_used) = i2_row.transpose();
  ++windows_used;
}

Vector svec_quadratic(const Vector& x) {
  const Eigen::Index n = x.size();
  Vector v(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b) v[k++] = (a == b ? 1.0 : 2.0) * x[a] * x[b];
  return v;
}

int unknown_count(int n, int m) { return n * (n + 1) / 2 + m * n; }

namespace {

// One term of a window integral: the state at sample `at`, the control held
// on substep `hold`, and the weight (discount included).
struct Node {
  std::size_t at;
  std::size_t hold;
  double weight;
};

// Left: h g(x_k, u_k). Trapezoid: h/2 (g(x_k, u_k) + g(x_{k+1}, u_k)), the
// control being held across the substep.
std::vector<Node> window_nodes(const WindowSegment& seg, double lambda, WindowQuadrature rule) {
  const std::size_t N = seg.times.size();
  if (N < 3) throw InvalidArgument("window segment needs at least 2 substeps");
  if (seg.states.size() != N || seg.controls.size() != N)
    throw DimensionMismatch("window segment: times, states and controls differ in length");
  const double h = (seg.times.back() - seg.times.front()) / static_cast<double>(N - 1);
  if (!(h > 0.0)) throw InvalidArgument("window segment: times must increase");
  for (std::size_t k = 1; k < N; ++k) {
    if (std::abs(seg.times[k] - seg.times[k - 1] - h) > 1e-9 * std::max(1.0, h) + 1e-6 * h)
      throw InvalidArgument("window segment: samples are not equally spaced");
  }
  std::vector<Node> nodes;
  for (std::size_t k = 0; k + 1 < N; ++k) {
    if (rule == WindowQuadrature::Left) {
      nodes.push_back({k, k, h * std::exp(-lambda * seg.times[k])});
    } else {
      nodes.push_back({k, k, 0.5 * h * std::exp(-lambda * seg.times[k])});
      nodes.push_back({k + 1, k, 0.5 * h * std::exp(-lambda * seg.times[k + 1])});
    }
  }
  return nodes;
}

Vector endpoint_difference(const WindowSegment& seg, double lambda) {
  return std::exp(-lambda * seg.times.back()) * svec_quadratic(seg.states.back()) -
         std::exp(-lambda * seg.times.front()) * svec_quadratic(seg.states.front());
}

Vector least_squares(const Matrix& M, const Vector& rhs) {
  return M.colPivHouseholderQr().solve(rhs);
}

}  // namespace

std::pair<Vector, double> collect_onpolicy_window(const WindowSegment& seg, const Matrix& K,
                                                  const Matrix& Q, const Matrix& R,
                                                  double lambda, WindowQuadrature rule) {
  const auto nodes = window_nodes(seg, lambda, rule);
  const int n = static_cast<int>(seg.states.front().size());
  const int m = static_cast<int>(seg.controls.front().size());
  if (K.rows() != m || K.cols() != n) throw DimensionMismatch("on-policy window: K must be m x n");
  const int d = n * (n + 1) / 2;
  Vector row(d + m * n);
  row.head(d) = endpoint_difference(seg, lambda);
  const Matrix S = Q + K.transpose() * R * K;
  Matrix C = Matrix::Zero(m, n);
  double xi = 0.0;
  for (const Node& nd : nodes) {
    const Vector& x = seg.states[nd.at];
    const Vector e = seg.controls[nd.hold] + K * x;
    C += nd.weight * (R * e) * x.transpose();
    xi -= nd.weight * x.dot(S * x);
  }
  row.tail(m * n) = -2.0 * Eigen::Map<const Vector>(C.data(), m * n);
  return {row, xi};
}

OffPolicyRow collect_offpolicy_window(const WindowSegment& seg, double lambda,
                                      WindowQuadrature rule) {
  const auto nodes = window_nodes(seg, lambda, rule);
  const int n = static_cast<int>(seg.states.front().size());
  const int m = static_cast<int>(seg.controls.front().size());
  Matrix X1 = Matrix::Zero(n, n);
  Matrix X2 = Matrix::Zero(n, m);
  for (const Node& nd : nodes) {
    const Vector& x = seg.states[nd.at];
    X1 += nd.weight * x * x.transpose();
    X2 += nd.weight * x * seg.controls[nd.hold].transpose();
  }
  OffPolicyRow row;
  row.delta = endpoint_difference(seg, lambda);
  // Row-major flattening: index a * n + b and a * m + c.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> X1r = X1, X2r = X2;
  row.i1 = Eigen::Map<const Vector>(X1r.data(), n * n);
  row.i2 = Eigen::Map<const Vector>(X2r.data(), n * m);
  return row;
}

PolicyPair solve_onpolicy(const OnPolicyRows& rows, int n, int m, double rank_tol) {
  const int needed = unknown_count(n, m);
  if (rows.theta.cols() != needed) throw DimensionMismatch("solve_onpolicy: theta has the wrong width");
  const int rank = rows.windows_used == 0 ? 0 : numerical_rank(rows.theta, rank_tol);
  if (rank < needed) throw RankDeficient("solve_onpolicy: rank condition fails", rank, needed);
  const Vector sol = least_squares(rows.theta, rows.xi);
  const int d = n * (n + 1) / 2;
  return {smat(sol.head(d), n), Eigen::Map<const Matrix>(sol.tail(m * n).data(), m, n)};
}

namespace {

Matrix reduced_i1(const OffPolicyRows& rows, int n) {
  Matrix red(rows.i1.rows(), n * (n + 1) / 2);
  int c = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) red.col(c++) = rows.i1.col(a * n + b);
  return red;
}

}  // namespace

int offpolicy_rank(const OffPolicyRows& rows, int n, double rank_tol) {
  if (rows.windows_used == 0) return 0;
  Matrix M(rows.i1.rows(), n * (n + 1) / 2 + rows.i2.cols());
  M << reduced_i1(rows, n), rows.i2;
  return numerical_rank(M, rank_tol);
}

PolicyPair solve_offpolicy(const OffPolicyRows& rows, const Matrix& K, const Matrix& Q,
                           const Matrix& R, double rank_tol) {
  const int n = static_cast<int>(Q.rows());
  const int m = static_cast<int>(R.rows());
  if (K.rows() != m || K.cols() != n) throw DimensionMismatch("solve_offpolicy: K must be m x n");
  if (rows.windows_used > 0 && (rows.i1.cols() != n * n || rows.i2.cols() != n * m))
    throw DimensionMismatch("solve_offpolicy: data rows do not match Q and R");
  const int needed = unknown_count(n, m);
  const int rank = offpolicy_rank(rows, n, rank_tol);
  if (rank < needed) throw RankDeficient("solve_offpolicy: rank condition fails", rank, needed);

  const int d = n * (n + 1) / 2;
  const Eigen::Index l = rows.windows_used;
  const Matrix RK = R * K;
  const Matrix S = Q + K.transpose() * R * K;
  Matrix M(l, needed);
  Vector rhs(l);
  M.leftCols(d) = rows.delta;
  for (Eigen::Index r = 0; r < l; ++r) {
    const Matrix X1 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                     Eigen::RowMajor>>(rows.i1.row(r).eval().data(), n, n);
    const Matrix X2 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                     Eigen::RowMajor>>(rows.i2.row(r).eval().data(), n, m);
    // Coefficient of K_{k+1}(i, j): (R X2' + R K_k X1)(i, j).
    const Matrix C = R * X2.transpose() + RK * X1;
    M.block(r, d, 1, m * n) = -2.0 * Eigen::Map<const Vector>(C.data(), m * n).transpose();
    rhs[r] = -(S.cwiseProduct(X1)).sum();
  }
  const Vector sol = least_squares(M, rhs);
  return {smat(sol.head(d), n), Eigen::Map<const Matrix>(sol.tail(m * n).data(), m, n)};
}

double settling_time(const Trajectory& traj, double band) {
  if (traj.size() == 0) throw InvalidArgument("settling_time: empty trajectory");
  std::size_t last_bad = traj.size();
  for (std::size_t k = 0; k < traj.size(); ++k)
    if (traj.states[k].lpNorm<Eigen::Infinity>() > band) last_bad = k;
  if (last_bad == traj.size()) return traj.times.front() > 0.0 ? traj.times.front() : 0.0;
  if (last_bad + 1 == traj.size()) return std::numeric_limits<double>::infinity();
  return traj.times[last_bad + 1];
}

namespace {

// Single sampled run shared by both learners: the hidden plant advanced
// exactly over each substep with the control held (zero-order hold),
// discounted running-cost accumulation over [0, horizon] and settling
// bookkeeping.
class LearningRun {
 public:
  LearningRun(const LqProblem& sys, const Vector& x0, const LearnerConfig& cfg)
      : sys_(sys),
        cfg_(cfg),
        h_(cfg.window / cfg.n_sub),
        x_(x0),
        rng_(cfg.seed),
        sigma_(sys.alpha * sys.R.llt().solve(Matrix::Identity(sys.m(), sys.m()))),
        explorer_(cfg.sinusoid_amplitude, cfg.sinusoid_omega_bar, cfg.sinusoid_terms, sys.m(),
                  cfg.seed) {
    sigma_ = 0.5 * (sigma_ + sigma_.transpose());
    // exp([[A, B], [0, 0]] h) = [[Ad, Bd], [0, I]].
    const int n = sys.n(), m = sys.m();
    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = sys.A * h_;
    aug.topRightCorner(n, m) = sys.B * h_;
    const Matrix E = aug.exp();
    Ad_ = E.topLeftCorner(n, n);
    Bd_ = E.topRightCorner(n, m);
    if (cfg.record_trajectory) {
      trajectory_.emplace();
      trajectory_->seed = cfg.seed;
    }
  }

  double time() const { return static_cast<double>(step_) * h_; }
  const Vector& state() const { return x_; }

  Vector exploring_control(const Matrix& K) {
    if (cfg_.exploration == Exploration::Sinusoid) return -(K * x_) + explorer_(time());
    return GaussianPolicy(K, sigma_).sample(x_, rng_);
  }

  void advance(const Vector& u) {
    const double s = time();
    if (s < cfg_.horizon - 1e-12)
      cost_ += std::exp(-sys_.lambda * s) * h_ * 0.5 * (x_.dot(sys_.Q * x_) + u.dot(sys_.R * u));
    track(s, x_);
    if (trajectory_) trajectory_->append(s, x_, u);
    x_ = Ad_ * x_ + Bd_ * u;
    ++step_;
    if (!x_.allFinite() || x_.lpNorm<Eigen::Infinity>() > cfg_.divergence_bound)
      throw DivergedTrajectory("learner: closed-loop state left the divergence bound", step_);
  }

  /// n_sub substeps; the last sample repeats the control held on the final substep.
  WindowSegment window(const Matrix& K) {
    WindowSegment seg;
    for (int k = 0; k < cfg_.n_sub; ++k) {
      const Vector u = exploring_control(K);
      seg.times.push_back(time());
      seg.states.push_back(x_);
      seg.controls.push_back(u);
      advance(u);
    }
    seg.times.push_back(time());
    seg.states.push_back(x_);
    seg.controls.push_back(seg.controls.back());
    return seg;
  }

  void finish(const Matrix& K, LearnerReport& report) {
    report.learning_time = time();
    const double end = std::max(cfg_.horizon, time());
    const auto total = static_cast<std::size_t>(std::llround(end / h_));
    while (step_ < total) advance(-(K * x_));
    track(time(), x_);
    if (trajectory_) trajectory_->append(time(), x_, -(K * x_));
    report.total_running_cost = cost_;
    report.settling_time = !any_bad_ ? 0.0
                           : last_bad_is_final_ ? std::numeric_limits<double>::infinity()
                                                : settle_;
    report.trajectory = std::move(trajectory_);
    report.final_K = K;
  }

 private:
  void track(double s, const Vector& x) {
    if (x.lpNorm<Eigen::Infinity>() > cfg_.settling_band) {
      any_bad_ = true;
      last_bad_is_final_ = true;
    } else if (last_bad_is_final_) {
      last_bad_is_final_ = false;
      settle_ = s;
    }
  }

  const LqProblem& sys_;
  const LearnerConfig& cfg_;
  double h_;
  Vector x_;
  std::size_t step_ = 0;
  RandomSource rng_;
  Matrix Ad_;
  Matrix Bd_;
  Matrix sigma_;
  SinusoidalExploration explorer_;
  double cost_ = 0.0;
  bool any_bad_ = false;
  bool last_bad_is_final_ = false;
  double settle_ = 0.0;
  std::optional<Trajectory> trajectory_;
};

void check_config(const LqProblem& system, const Matrix& K0, const Vector& x0,
                  const LearnerConfig& cfg) {
  system.validate();
  if (K0.rows() != system.m() || K0.cols() != system.n())
    throw DimensionMismatch("learner: K0 must be m x n");
  if (x0.size() != system.n()) throw DimensionMismatch("learner: x0 must have n entries");
  if (!(cfg.window > 0.0)) throw InvalidArgument("learner: window must be > 0");
  if (cfg.n_sub < 2) throw InvalidArgument("learner: n_sub must be >= 2");
  if (!(cfg.eps_stop > 0.0)) throw InvalidArgument("learner: eps_stop must be > 0");
  if (cfg.max_iters < 1) throw InvalidArgument("learner: max_iters must be >= 1");
  if (cfg.window_budget_factor < 1) throw InvalidArgument("learner: window_budget_factor must be >= 1");
}

}  // namespace

LearnerReport run_onpolicy(const LqProblem& system, const Matrix& K0, const Vector& x0,
                           const LearnerConfig& config) {
  check_config(system, K0, x0, config);
  const int n = system.n(), m = system.m();
  const int needed = unknown_count(n, m);
  LearningRun run(system, x0, config);
  LearnerReport report;
  Matrix K = K0;
  Matrix prev = Matrix::Zero(n, n);
  for (int iter = 0; iter < config.max_iters; ++iter) {
    OnPolicyRows rows;
    while (true) {
      const WindowSegment seg = run.window(K);
      const auto [row, xi] =
          collect_onpolicy_window(seg, K, system.Q, system.R, system.lambda, config.quadrature);
      rows.append(row, xi);
      if (rows.windows_used >= needed && numerical_rank(rows.theta, config.rank_tol) == needed) break;
      if (rows.windows_used >= config.window_budget_factor * needed)
        throw RankStall("run_onpolicy: rank condition not met within the window budget");
    }
    const PolicyPair pair = solve_onpolicy(rows, n, m, config.rank_tol);
    report.iterates.push_back({pair.P, pair.K});
    report.samples_per_iter.push_back(rows.windows_used);
    report.total_samples += rows.windows_used;
    const double diff = (pair.P - prev).norm();
    prev = pair.P;
    K = pair.K;
    if (diff < config.eps_stop) {
      report.converged = true;
      break;
    }
  }
  report.final_P = prev;
  run.finish(K, report);
  return report;
}

LearnerReport run_offpolicy(const LqProblem& system, const Matrix& K0, const Vector& x0,
                            const LearnerConfig& config) {
  check_config(system, K0, x0, config);
  const int n = system.n(), m = system.m();
  const int needed = unknown_count(n, m);
  LearningRun run(system, x0, config);
  LearnerReport report;
  OffPolicyRows rows;
  while (true) {
    const OffPolicyRow r = collect_offpolicy_window(run.window(K0), system.lambda, config.quadrature);
    rows.append(r.delta, r.i1, r.i2);
    if (rows.windows_used >= needed && offpolicy_rank(rows, n, config.rank_tol) == needed) break;
    if (rows.windows_used >= config.window_budget_factor * needed)
      throw RankStall("run_offpolicy: rank condition not met within the window budget");
  }
  report.total_samples = rows.windows_used;
  Matrix K = K0;
  Matrix prev = Matrix::Zero(n, n);
  for (int iter = 0; iter < config.max_iters; ++iter) {
    const PolicyPair pair = solve_offpolicy(rows, K, system.Q, system.R, config.rank_tol);
    report.iterates.push_back({pair.P, pair.K});
    report.samples_per_iter.push_back(iter == 0 ? rows.windows_used : 0);
    const double diff = (pair.P - prev).norm();
    prev = pair.P;
    K = pair.K;
    if (diff < config.eps_stop) {
      report.converged = true;
      break;
    }
  }
  report.final_P = prev;
  run.finish(K, report);
  return report;
}

}  // namespace maxent_hjb
