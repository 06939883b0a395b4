#include "maxent_hjb/lq_maxent.hpp"

#include <cmath>
#include <numbers>

#include "maxent_hjb/errors.hpp"

namespace maxent_hjb {

namespace {

bool symmetric(const Matrix& M, double rel = 1e-12) {
  return (M - M.transpose()).norm() <= rel * std::max(1.0, M.norm());
}

double log_det_pd(const Matrix& M) {
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double log_partition_constant(const LqProblem& prob) {
  // log((2 pi alpha)^m / det R)
  return prob.m() * std::log(2.0 * std::numbers::pi * prob.alpha) - log_det_pd(prob.R);
}

}  // namespace

std::vector<std::string> LqProblem::validate() const {
  const int n = this->n();
  const int m = this->m();
  if (A.rows() != A.cols()) throw DimensionMismatch("LqProblem: A must be square");
  if (B.rows() != n) throw DimensionMismatch("LqProblem: B must have n rows");
  if (Q.rows() != n || Q.cols() != n) throw DimensionMismatch("LqProblem: Q must be n x n");
  if (R.rows() != m || R.cols() != m) throw DimensionMismatch("LqProblem: R must be m x m");
  if (!symmetric(Q)) throw InvalidArgument("LqProblem: Q must be symmetric");
  if (!symmetric(R)) throw InvalidArgument("LqProblem: R must be symmetric");
  if (Eigen::LLT<Matrix>(R).info() != Eigen::Success)
    throw NotPositiveDefinite("LqProblem: R must be positive definite");
  if (!(lambda >= 0.0)) throw InvalidArgument("LqProblem: lambda must be >= 0");
  if (!(alpha > 0.0)) throw InvalidArgument("LqProblem: alpha must be > 0");

  std::vector<std::string> warnings;
  const Matrix As = A - 0.5 * lambda * Matrix::Identity(n, n);
  Matrix ctrb(n, n * m);
  Matrix block = B;
  for (int k = 0; k < n; ++k) {
    ctrb.middleCols(k * m, m) = block;
    block = As * block;
  }
  if (numerical_rank(ctrb) < n)
    warnings.push_back("(A - lambda/2 I, B) fails the controllability rank test");
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
  const Matrix Qh =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  Matrix obsv(n * n, n);
  block = Qh;
  for (int k = 0; k < n; ++k) {
    obsv.middleRows(k * n, n) = block;
    block = block * As;
  }
  if (numerical_rank(obsv) < n)
    warnings.push_back("(A - lambda/2 I, Q^1/2) fails the observability rank test");
  return warnings;
}

double spectral_abscissa(const Matrix& M) {
  if (M.size() == 0) return -std::numeric_limits<double>::infinity();
  return Eigen::EigenSolver<Matrix>(M, false).eigenvalues().real().maxCoeff();
}

int numerical_rank(const Matrix& M, double rel_tol) {
  if (M.size() == 0) return 0;
  const Vector s = Eigen::JacobiSVD<Matrix>(M).singularValues();
  const double cut = rel_tol * s[0];
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > cut) ++rank;
  return rank;
}

Vector svec(const Matrix& P) {
  const Eigen::Index n = P.rows();
  Vector v(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) v[k++] = P(i, j);
  return v;
}

Matrix smat(const Vector& v, int n) {
  if (v.size() != static_cast<Eigen::Index>(n) * (n + 1) / 2)
    throw DimensionMismatch("smat: length must be n(n+1)/2");
  Matrix P(n, n);
  Eigen::Index k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) P(i, j) = P(j, i) = v[k++];
  return P;
}

Matrix solve_lyapunov(const Matrix& A_cl, double lambda, const Matrix& M) {
  const int n = static_cast<int>(A_cl.rows());
  if (A_cl.cols() != n || M.rows() != n || M.cols() != n)
    throw DimensionMismatch("solve_lyapunov: A_cl and M must be n x n");
  if (!symmetric(M, 1e-10)) throw InvalidArgument("solve_lyapunov: M must be symmetric");
  const double abscissa = spectral_abscissa(A_cl - 0.5 * lambda * Matrix::Identity(n, n));
  if (!(abscissa < 0.0))
    throw NotHurwitz("solve_lyapunov: A_cl - lambda/2 I is not Hurwitz", abscissa);

  const int d = n * (n + 1) / 2;
  Matrix L(d, d);
  Matrix E = Matrix::Zero(n, n);
  int col = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      E(i, j) = E(j, i) = 1.0;
      L.col(col++) = svec(A_cl.transpose() * E + E * A_cl - lambda * E);
      E(i, j) = E(j, i) = 0.0;
    }
  }
  const Eigen::FullPivLU<Matrix> lu(L);
  if (!lu.isInvertible()) throw Error("solve_lyapunov: singular linear system");
  const Vector rhs = -svec(M);
  Vector x = lu.solve(rhs);
  // One step of iterative refinement.
  x += lu.solve(rhs - L * x);
  return smat(x, n);
}

Matrix are_residual(const LqProblem& prob, const Matrix& P) {
  const Matrix BtP = prob.B.transpose() * P;
  return prob.lambda * P + BtP.transpose() * prob.R.llt().solve(BtP) - prob.Q - P * prob.A -
         prob.A.transpose() * P;
}

RiccatiSolution kleinman_iterate(const LqProblem& prob, const Matrix& K0, double tol,
                                 int max_iterations) {
  prob.validate();
  const int n = prob.n();
  if (K0.rows() != prob.m() || K0.cols() != n) throw DimensionMismatch("kleinman_iterate: K0 must be m x n");
  if (!(tol > 0.0)) throw InvalidArgument("kleinman_iterate: tol must be > 0");
  const Matrix I = Matrix::Identity(n, n);
  const double a0 = spectral_abscissa(prob.A - 0.5 * prob.lambda * I - prob.B * K0);
  if (!(a0 < 0.0)) throw NotHurwitz("kleinman_iterate: K0 is not stabilizing", a0);

  const Eigen::LLT<Matrix> r_llt(prob.R);
  RiccatiSolution sol;
  Matrix K = K0;
  for (int k = 0; k < max_iterations; ++k) {
    const Matrix P = solve_lyapunov(prob.A - prob.B * K, prob.lambda,
                                    prob.Q + K.transpose() * prob.R * K);
    const Matrix Ps = 0.5 * (P + P.transpose());
    sol.p_iterates.push_back(Ps);
    K = r_llt.solve(prob.B.transpose() * Ps);
    if (k > 0 && (Ps - sol.p_iterates[sol.p_iterates.size() - 2]).norm() < tol) {
      sol.P = Ps;
      sol.K = K;
      sol.iterations = k + 1;
      sol.residual = are_residual(prob, Ps).norm();
      return sol;
    }
  }
  std::string trace;
  for (std::size_t i = 0; i < sol.p_iterates.size(); i += std::max<std::size_t>(1, sol.p_iterates.size() / 8))
    trace += " " + std::to_string(sol.p_iterates[i].norm());
  throw NoConvergence("kleinman_iterate: no convergence in " + std::to_string(max_iterations) +
                      " iterations; ||P_k||_F trace:" + trace);
}

RiccatiSolution kleinman_iterate(const LqProblem& prob, double tol) {
  return kleinman_iterate(prob, Matrix::Zero(prob.m(), prob.n()), tol);
}

double MaxEntLqPolicy::value(const Vector& x) const { return 0.5 * x.dot(P * x) + c; }

MaxEntLqPolicy maxent_policy(const LqProblem& prob, const RiccatiSolution& riccati) {
  if (prob.lambda == 0.0)
    throw InvalidArgument(
        "maxent_policy: the value constant needs lambda > 0; use a finite-horizon simulation");
  prob.validate();
  if (riccati.P.rows() != prob.n() || riccati.K.rows() != prob.m())
    throw DimensionMismatch("maxent_policy: Riccati solution does not match the problem");
  MaxEntLqPolicy out;
  out.K = riccati.K;
  out.P = riccati.P;
  const Matrix Rinv = prob.R.llt().solve(Matrix::Identity(prob.m(), prob.m()));
  out.Sigma = prob.alpha * 0.5 * (Rinv + Rinv.transpose());
  out.c = -(prob.alpha / (2.0 * prob.lambda)) * log_partition_constant(prob);
  return out;
}

double soft_hjb_residual(const LqProblem& prob, const MaxEntLqPolicy& policy, const Vector& x) {
  const Vector grad = policy.P * x;
  const Vector Btg = prob.B.transpose() * grad;
  return prob.lambda * policy.value(x) + 0.5 * Btg.dot(prob.R.llt().solve(Btg)) -
         0.5 * x.dot(prob.Q * x) - grad.dot(prob.A * x) +
         0.5 * prob.alpha * log_partition_constant(prob);
}

QuantitativeGaps quantitative_gaps(const LqProblem& prob) {
  const int m = prob.m();
  const Matrix Rinv = prob.R.llt().solve(Matrix::Identity(m, m));
  QuantitativeGaps g;
  g.w2_sq = prob.alpha * Rinv.trace();
  g.entropy_per_time = 0.5 * log_partition_constant(prob) + 0.5 * m;
  g.pure_cost_overhead = prob.lambda > 0.0 ? m * prob.alpha / (2.0 * prob.lambda)
                                           : std::numeric_limits<double>::infinity();
  return g;
}

GaussianAtState control_affine_policy(const DynamicsModel& model,
                                      const std::function<Vector(const Vector&)>& grad_v0,
                                      const Matrix& R, double alpha, const Vector& x) {
  if (R.rows() != model.control_dim() || R.cols() != model.control_dim())
    throw DimensionMismatch("control_affine_policy: R must be m x m");
  const Eigen::LLT<Matrix> llt(R);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("control_affine_policy: R not PD");
  const Matrix f2 = model.input_map(x);
  const Vector g = grad_v0(x);
  if (g.size() != model.state_dim()) throw DimensionMismatch("control_affine_policy: gradient size");
  GaussianAtState out;
  out.mean = -llt.solve(f2.transpose() * g);
  out.covariance = alpha * llt.solve(Matrix::Identity(R.rows(), R.cols()));
  return out;
}

}  // namespace maxent_hjb
