#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "maxent_hjb/adaptive_dp.hpp"
#include "maxent_hjb/errors.hpp"
#include "maxent_hjb/matrix_io.hpp"

using namespace maxent_hjb;

namespace {

LqProblem load_fixture(const std::string& name, double alpha = 1.0, double lambda = 1e-10) {
  const std::string dir = std::string(MAXENT_HJB_FIXTURE_DIR) + "/" + name + "/";
  return LqProblem{read_matrix(dir + "A.txt"), read_matrix(dir + "B.txt"), read_matrix(dir + "Q.txt"),
                   read_matrix(dir + "R.txt"), lambda, alpha};
}

Matrix random_spd(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> N;
  Matrix G(n, n);
  for (int i = 0; i < n * n; ++i) G.data()[i] = N(gen);
  return G * G.transpose() + Matrix::Identity(n, n);
}

Matrix random_matrix(int r, int c, std::mt19937_64& gen) {
  std::normal_distribution<double> N;
  Matrix M(r, c);
  for (int i = 0; i < r * c; ++i) M.data()[i] = N(gen);
  return M;
}

WindowSegment constant_segment(double t0, double dt, int n_sub, const Vector& x, const Vector& u) {
  WindowSegment seg;
  for (int k = 0; k <= n_sub; ++k) {
    seg.times.push_back(t0 + dt * k / n_sub);
    seg.states.push_back(x);
    seg.controls.push_back(u);
  }
  return seg;
}

// Instantaneous off-policy rows of the true plant at random (x, u), lambda = 0:
// delta is d/ds of the quadratic regressors along xdot = Ax + Bu.
OffPolicyRows instantaneous_rows(const Matrix& A, const Matrix& B, int count, std::mt19937_64& gen) {
  const int n = static_cast<int>(A.rows()), m = static_cast<int>(B.cols());
  OffPolicyRows rows;
  for (int r = 0; r < count; ++r) {
    const Vector x = random_matrix(n, 1, gen), u = random_matrix(m, 1, gen);
    const Vector xdot = A * x + B * u;
    // Central difference of a quadratic is exact.
    const Vector delta = 0.5 * (svec_quadratic(x + xdot) - svec_quadratic(x - xdot));
    Vector i1(n * n), i2(n * m);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) i1[a * n + b] = x[a] * x[b];
      for (int c = 0; c < m; ++c) i2[a * m + c] = x[a] * u[c];
    }
    rows.append(delta, i1, i2);
  }
  return rows;
}

double rel_err(const Matrix& P, const Matrix& ref) { return (P - ref).norm() / ref.norm(); }

}  // namespace

TEST(SvecQuadratic, ContractsWithSvec) {
  std::mt19937_64 gen(1);
  const Matrix P = random_spd(4, gen);
  const Vector x = random_matrix(4, 1, gen);
  EXPECT_NEAR(svec_quadratic(x).dot(svec(P)), x.dot(P * x), 1e-12);
  EXPECT_EQ(unknown_count(10, 10), 155);
  EXPECT_EQ(unknown_count(1, 1), 2);
}

TEST(OnPolicyWindow, NoExplorationGivesZeroGainBlock) {
  std::mt19937_64 gen(2);
  const Matrix K = random_matrix(2, 3, gen);
  const Matrix Q = Matrix::Identity(3, 3), R = Matrix::Identity(2, 2);
  WindowSegment seg;
  for (int k = 0; k <= 10; ++k) {
    const Vector x = random_matrix(3, 1, gen);
    seg.times.push_back(0.001 * k);
    seg.states.push_back(x);
    seg.controls.push_back(-K * x);
  }
  // Left sums pair each state with its own control.
  EXPECT_EQ(collect_onpolicy_window(seg, K, Q, R, 0.1, WindowQuadrature::Left).first.tail(6).norm(), 0.0);
  // A constant state makes the held control exact at both substep ends.
  const Vector x = random_matrix(3, 1, gen);
  const auto still = constant_segment(0.0, 0.01, 10, x, -K * x);
  for (auto rule : {WindowQuadrature::Left, WindowQuadrature::Trapezoid})
    EXPECT_LT(collect_onpolicy_window(still, K, Q, R, 0.1, rule).first.tail(6).norm(), 1e-15);
}

TEST(OnPolicyWindow, ZeroStateGivesZeroRow) {
  const auto seg = constant_segment(0.0, 0.01, 10, Vector::Zero(3), Vector::Zero(2));
  const auto [row, xi] =
      collect_onpolicy_window(seg, Matrix::Ones(2, 3), Matrix::Identity(3, 3), Matrix::Identity(2, 2), 0.1);
  EXPECT_EQ(row.norm(), 0.0);
  EXPECT_EQ(xi, 0.0);
}

TEST(OnPolicyWindow, ConstantScalarHandIntegration) {
  const double dt = 0.01, q = 0.7;
  const auto seg = constant_segment(3.0, dt, 10, Vector::Ones(1), Vector::Zero(1));
  for (auto rule : {WindowQuadrature::Left, WindowQuadrature::Trapezoid}) {
    const auto [row, xi] =
        collect_onpolicy_window(seg, Matrix::Zero(1, 1), Matrix::Constant(1, 1, q), Matrix::Ones(1, 1), 0.0, rule);
    EXPECT_NEAR(xi, -dt * q, 1e-15);
    EXPECT_EQ(row[0], 0.0);
    EXPECT_EQ(row[1], 0.0);
  }
}

TEST(OnPolicyWindow, RejectsMisalignedSegment) {
  auto seg = constant_segment(0.0, 0.01, 10, Vector::Ones(2), Vector::Zero(1));
  seg.controls.pop_back();
  EXPECT_THROW(collect_onpolicy_window(seg, Matrix::Zero(1, 2), Matrix::Identity(2, 2), Matrix::Ones(1, 1), 0.0),
               DimensionMismatch);
  seg = constant_segment(0.0, 0.01, 10, Vector::Ones(2), Vector::Zero(1));
  seg.times[4] += 0.0005;
  EXPECT_THROW(collect_onpolicy_window(seg, Matrix::Zero(1, 2), Matrix::Identity(2, 2), Matrix::Ones(1, 1), 0.0),
               InvalidArgument);
}

TEST(OffPolicyWindow, ZeroAndConstantSegments) {
  const double dt = 0.01;
  const auto zero = collect_offpolicy_window(constant_segment(0.0, dt, 10, Vector::Zero(3), Vector::Ones(2)), 0.0);
  EXPECT_EQ(zero.delta.norm() + zero.i1.norm() + zero.i2.norm(), 0.0);
  const Vector c = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const auto row = collect_offpolicy_window(constant_segment(1.0, dt, 10, c, Vector::Zero(2)), 0.0);
  EXPECT_EQ(row.delta.norm(), 0.0);
  EXPECT_EQ(row.i2.norm(), 0.0);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) EXPECT_NEAR(row.i1[a * 3 + b], dt * c[a] * c[b], 1e-15);
}

TEST(OffPolicyWindow, DiscountScalesLaterWindows) {
  const double dt = 0.01, lambda = 50.0;
  const Vector c = (Vector(2) << 1.0, 0.3).finished(), u = (Vector(1) << 0.2).finished();
  const auto first = collect_offpolicy_window(constant_segment(0.2, dt, 10, c, u), lambda);
  const auto second = collect_offpolicy_window(constant_segment(0.2 + dt, dt, 10, c, u), lambda);
  const double ratio = std::exp(-lambda * dt);
  EXPECT_LT((second.i1 - ratio * first.i1).norm(), 1e-14 * first.i1.norm());
  EXPECT_LT((second.i2 - ratio * first.i2).norm(), 1e-14 * first.i2.norm());
  EXPECT_LT((second.delta - ratio * first.delta).norm(), 1e-14 * (1.0 + first.delta.norm()));
}

TEST(SolveOnPolicy, ForwardSynthesisRecovery) {
  std::mt19937_64 gen(3);
  const int n = 3, m = 2, d = unknown_count(n, m);
  const Matrix P = random_spd(n, gen), K = random_matrix(m, n, gen);
  Vector z(d);
  z << svec(P), Eigen::Map<const Vector>(K.data(), m * n);
  OnPolicyRows rows;
  for (int r = 0; r < d + 5; ++r) {
    const Vector theta = random_matrix(d, 1, gen);
    rows.append(theta, theta.dot(z));
  }
  const auto sol = solve_onpolicy(rows, n, m);
  EXPECT_LT((sol.P - P).norm(), 1e-8);
  EXPECT_LT((sol.K - K).norm(), 1e-8);
  EXPECT_EQ(sol.P, sol.P.transpose());
}

TEST(SolveOnPolicy, DuplicateRowsAreRankDeficient) {
  OnPolicyRows rows;
  const Vector theta = Vector::LinSpaced(unknown_count(2, 1), 1.0, 2.0);
  for (int r = 0; r < 20; ++r) rows.append(theta, 1.0);
  try {
    solve_onpolicy(rows, 2, 1);
    FAIL() << "expected RankDeficient";
  } catch (const RankDeficient& e) {
    EXPECT_EQ(e.rank(), 1);
    EXPECT_EQ(e.needed(), unknown_count(2, 1));
  }
}

TEST(SolveOnPolicy, ScalarNeedsTwoWindows) {
  OnPolicyRows rows;
  rows.append((Vector(2) << 1.0, 2.0).finished(), 5.0);
  EXPECT_THROW(solve_onpolicy(rows, 1, 1), RankDeficient);
  rows.append((Vector(2) << -1.0, 1.0).finished(), 1.0);
  const auto sol = solve_onpolicy(rows, 1, 1);
  EXPECT_NEAR(sol.P(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(sol.K(0, 0), 2.0, 1e-12);
}

TEST(SolveOffPolicy, ForwardSynthesisRecovery) {
  std::mt19937_64 gen(4);
  const int n = 3, m = 2, d = n * (n + 1) / 2;
  const Matrix Q = random_spd(n, gen), R = random_spd(m, gen);
  const Matrix Kk = random_matrix(m, n, gen);
  const Matrix P = random_spd(n, gen), K = random_matrix(m, n, gen);
  OffPolicyRows rows;
  for (int r = 0; r < 30; ++r) {
    Matrix X1 = Matrix::Zero(n, n);
    for (int s = 0; s < 4; ++s) {
      const Vector x = random_matrix(n, 1, gen);
      X1 += x * x.transpose();
    }
    const Matrix X2 = random_matrix(n, m, gen);
    // Scalar form of the identity: delta.svec(P) - 2 tr(X2 R K) - 2 tr(X1 Kk' R K) = -tr(X1 (Q + Kk' R Kk)).
    const double target = -(X1 * (Q + Kk.transpose() * R * Kk)).trace() + 2.0 * (X2 * R * K).trace() +
                          2.0 * (X1 * Kk.transpose() * R * K).trace();
    Vector delta = random_matrix(d, 1, gen);
    const Vector sp = svec(P);
    delta += (target - delta.dot(sp)) / sp.squaredNorm() * sp;
    Vector i1(n * n), i2(n * m);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) i1[a * n + b] = X1(a, b);
      for (int c = 0; c < m; ++c) i2[a * m + c] = X2(a, c);
    }
    rows.append(delta, i1, i2);
  }
  const auto sol = solve_offpolicy(rows, Kk, Q, R);
  EXPECT_LT((sol.P - P).norm(), 1e-8);
  EXPECT_LT((sol.K - K).norm(), 1e-8);
}

TEST(SolveOffPolicy, ExactDataReproducesKleinmanSteps) {
  std::mt19937_64 gen(5);
  const LqProblem prob = load_fixture("lq_n3_m2", 1.0, 0.0);
  const OffPolicyRows rows = instantaneous_rows(prob.A, prob.B, 40, gen);
  const auto kl = kleinman_iterate(prob, Matrix::Zero(2, 3), 1e-12);
  // One step from K0 = 0 lands on the first Kleinman iterate.
  const auto first = solve_offpolicy(rows, Matrix::Zero(2, 3), prob.Q, prob.R);
  EXPECT_LT(rel_err(first.P, kl.p_iterates.front()), 1e-8);
  // At the optimum the update is a fixed point.
  const auto fixed = solve_offpolicy(rows, kl.K, prob.Q, prob.R);
  EXPECT_LT((fixed.K - kl.K).norm(), 1e-8 * (1.0 + kl.K.norm()));
  EXPECT_LT(rel_err(fixed.P, kl.P), 1e-8);
}

TEST(SolveOffPolicy, ZeroDataIsRankDeficient) {
  OffPolicyRows rows;
  for (int r = 0; r < 20; ++r) rows.append(Vector::Zero(6), Vector::Zero(9), Vector::Zero(6));
  EXPECT_THROW(solve_offpolicy(rows, Matrix::Zero(2, 3), Matrix::Identity(3, 3), Matrix::Identity(2, 2)),
               RankDeficient);
}

TEST(Sinusoid, ZeroAmplitudeAndSingleTerm) {
  const auto silent = sinusoidal_baseline(0.0, 100.0, 10, 2, 1);
  for (double t : {0.0, 0.37, 12.5}) EXPECT_EQ(silent(t).norm(), 0.0);
  const SinusoidalExploration one(0.5, Matrix::Constant(1, 1, 3.0));
  for (double t : {0.0, 0.1, 2.0}) EXPECT_DOUBLE_EQ(one(t)[0], 0.5 * std::sin(3.0 * t));
}

TEST(Sinusoid, BaselineConfiguration) {
  const auto a = sinusoidal_baseline(0.5, 100.0, 100, 2, 9);
  const auto b = sinusoidal_baseline(0.5, 100.0, 100, 2, 9);
  ASSERT_EQ(a.frequencies().rows(), 2);
  ASSERT_EQ(a.frequencies().cols(), 100);
  EXPECT_EQ(a.frequencies(), b.frequencies());
  EXPECT_LE(a.frequencies().cwiseAbs().maxCoeff(), 100.0);
  EXPECT_NE(a.frequencies().row(0), a.frequencies().row(1));
  const double t = 0.42;
  double expected = 0.0;
  for (int k = 0; k < 100; ++k) expected += 0.5 * std::sin(a.frequencies()(1, k) * t);
  EXPECT_NEAR(a(t)[1], expected, 1e-12);
}

TEST(SettlingTime, Examples) {
  Trajectory zero, two, decay;
  for (int k = 0; k <= 100; ++k) {
    zero.append(0.01 * k, Vector::Zero(2), Vector::Zero(1));
    two.append(0.01 * k, Vector::Constant(2, 2.0), Vector::Zero(1));
  }
  EXPECT_EQ(settling_time(zero, 1.0), 0.0);
  EXPECT_TRUE(std::isinf(settling_time(two, 1.0)));
  const double h = 1e-3;
  for (int k = 0; k <= 3000; ++k) decay.append(h * k, Vector::Constant(1, 2.0 * std::exp(-h * k)), Vector::Zero(1));
  EXPECT_NEAR(settling_time(decay, 1.0), std::log(2.0), h);
}

namespace {

struct RunCase {
  LqProblem prob;
  Matrix reference;
  Vector x0;
};

RunCase fixture_case() {
  RunCase c{load_fixture("lq_n3_m2"), Matrix(), Vector::Constant(3, 10.0)};
  c.reference = kleinman_iterate(c.prob, Matrix::Zero(2, 3), 1e-12).P;
  return c;
}

LearnerConfig learner(std::uint64_t seed, double eps) {
  LearnerConfig cfg;
  cfg.seed = seed;
  cfg.eps_stop = eps;
  return cfg;
}

bool every_gain_hurwitz(const LqProblem& prob, const LearnerReport& rep) {
  const Matrix shift = 0.5 * prob.lambda * Matrix::Identity(prob.n(), prob.n());
  for (const auto& it : rep.iterates)
    if (spectral_abscissa(prob.A - shift - prob.B * it.K_next) >= 0.0) return false;
  return true;
}

}  // namespace

TEST(RunOnPolicy, RecoversKleinmanSolution) {
  const auto c = fixture_case();
  const auto rep = run_onpolicy(c.prob, Matrix::Zero(2, 3), c.x0, learner(7, 0.5));
  EXPECT_TRUE(rep.converged);
  EXPECT_LE(rel_err(rep.final_P, c.reference), 5e-2);
  EXPECT_TRUE(every_gain_hurwitz(c.prob, rep));
  ASSERT_EQ(rep.samples_per_iter.size(), rep.iterates.size());
  int total = 0;
  for (int s : rep.samples_per_iter) {
    EXPECT_GE(s, unknown_count(3, 2));
    total += s;
  }
  EXPECT_EQ(total, rep.total_samples);
  EXPECT_NEAR(rep.learning_time, total * 0.01, 1e-9);
  if (rep.iterates.size() >= 2) {
    const Matrix& last = rep.iterates.back().P;
    const Matrix& prev = rep.iterates[rep.iterates.size() - 2].P;
    EXPECT_LT((last - prev).norm(), 0.5);
  }
}

TEST(RunOnPolicy, HugeThresholdStopsAfterOneIteration) {
  const auto c = fixture_case();
  const auto rep = run_onpolicy(c.prob, Matrix::Zero(2, 3), c.x0, learner(7, 1e9));
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterates.size(), 1u);
}

TEST(RunOnPolicy, IteratesTrackPolicyEvaluationAndLoewnerOrder) {
  // On this fixture the exact decrease P_0 - P_1 has eigenvalues near 1e-8,
  // below the regression error, so the order is checked up to that error.
  const auto c = fixture_case();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto rep = run_onpolicy(c.prob, Matrix::Zero(2, 3), c.x0, learner(seed, 1e-3));
    ASSERT_TRUE(rep.converged);
    Matrix K = Matrix::Zero(2, 3);
    std::vector<double> err;
    for (const auto& it : rep.iterates) {
      const Matrix exact = solve_lyapunov(c.prob.A - c.prob.B * K, c.prob.lambda,
                                          c.prob.Q + K.transpose() * c.prob.R * K);
      err.push_back((it.P - exact).norm());
      EXPECT_LE(err.back(), 5e-5 * exact.norm()) << "seed " << seed;
      K = it.K_next;
    }
    for (std::size_t k = 1; k < rep.iterates.size(); ++k) {
      const Matrix diff = rep.iterates[k - 1].P - rep.iterates[k].P;
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(diff).eigenvalues().minCoeff(),
                -1e-6 * rep.iterates[k - 1].P.norm() - err[k - 1] - err[k])
          << "seed " << seed << " iterate " << k;
    }
  }
}

TEST(RunOnPolicy, DeterministicGivenSeed) {
  const auto c = fixture_case();
  auto cfg = learner(3, 0.5);
  cfg.horizon = 50.0;
  const auto a = run_onpolicy(c.prob, Matrix::Zero(2, 3), c.x0, cfg);
  const auto b = run_onpolicy(c.prob, Matrix::Zero(2, 3), c.x0, cfg);
  EXPECT_EQ(a.final_P, b.final_P);
  EXPECT_EQ(a.samples_per_iter, b.samples_per_iter);
  EXPECT_EQ(a.total_running_cost, b.total_running_cost);
  EXPECT_EQ(a.settling_time, b.settling_time);
}

TEST(RunOnPolicy, UnstableStartDiverges) {
  auto c = fixture_case();
  c.prob.A += 5.0 * Matrix::Identity(3, 3);
  EXPECT_THROW(run_onpolicy(c.prob, Matrix::Zero(2, 3), c.x0, learner(1, 0.5)), DivergedTrajectory);
}

TEST(RunOffPolicy, RecoversKleinmanWithFewerSamples) {
  const auto c = fixture_case();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto off = run_offpolicy(c.prob, Matrix::Zero(2, 3), c.x0, learner(seed, 1e-3));
    const auto on = run_onpolicy(c.prob, Matrix::Zero(2, 3), c.x0, learner(seed, 0.5));
    EXPECT_TRUE(off.converged);
    EXPECT_LE(rel_err(off.final_P, c.reference), 5e-2);
    EXPECT_LT(off.total_samples, on.total_samples);
    EXPECT_TRUE(every_gain_hurwitz(c.prob, off));
  }
}

TEST(RunOffPolicy, OptimalStartConvergesImmediately) {
  const auto c = fixture_case();
  const auto kl = kleinman_iterate(c.prob, Matrix::Zero(2, 3), 1e-12);
  const auto rep = run_offpolicy(c.prob, kl.K, c.x0, learner(5, 1e-3));
  EXPECT_TRUE(rep.converged);
  EXPECT_LE(rep.iterates.size(), 2u);
}

TEST(RunOnPolicy, PaperScaleRankCount) {
  if (std::getenv("MAXENT_HJB_SLOW_TESTS") == nullptr) GTEST_SKIP() << "set MAXENT_HJB_SLOW_TESTS=1 to run";
  const LqProblem prob = load_fixture("lq_n10_m10");
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto cfg = learner(seed, 1e9);
    cfg.horizon = 5.0;
    const auto rep = run_onpolicy(prob, Matrix::Zero(10, 10), Vector::Constant(10, 10.0), cfg);
    if (!rep.samples_per_iter.empty() && rep.samples_per_iter.front() == 155) ++exact;
  }
  EXPECT_GE(exact, 18);
}
