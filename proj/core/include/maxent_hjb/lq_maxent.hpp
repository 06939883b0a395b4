#pragma once

#include <functional>
#include <string>
#include <vector>

#include "maxent_hjb/dynamics.hpp"

namespace maxent_hjb {

/// Discounted max-entropy LQ problem: dx = (Ax + Bu) ds,
/// r = 1/2 x'Qx + 1/2 u'Ru, discount lambda, temperature alpha.
struct LqProblem {
  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix R;
  double lambda = 0.0;
  double alpha = 1.0;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  /// Throws on shape errors, asymmetric Q/R or non-PD R. Returns warnings
  /// when (A - lambda/2 I, B) fails the controllability rank test or
  /// (A - lambda/2 I, Q^{1/2}) fails the observability rank test.
  std::vector<std::string> validate() const;
};

/// Largest real part of the eigenvalues.
double spectral_abscissa(const Matrix& M);

/// Numerical rank from singular values above rel_tol * sigma_max.
int numerical_rank(const Matrix& M, double rel_tol = 1e-8);

/// Symmetric matrix <-> vector of its upper triangle, row by row:
/// (P00, P01, ..., P0n-1, P11, ...). No scaling of off-diagonal entries.
Vector svec(const Matrix& P);
Matrix smat(const Vector& v, int n);

/// Symmetric P with A_cl'P + P A_cl - lambda P + M = 0, solved in svec
/// coordinates. Throws NotHurwitz unless A_cl - lambda/2 I is Hurwitz.
Matrix solve_lyapunov(const Matrix& A_cl, double lambda, const Matrix& M);

/// lambda P + P B R^-1 B'P - Q - PA - A'P.
Matrix are_residual(const LqProblem& prob, const Matrix& P);

struct RiccatiSolution {
  Matrix P;
  Matrix K;
  double residual = 0.0;  ///< Frobenius norm of are_residual
  int iterations = 0;
  std::vector<Matrix> p_iterates;  ///< P_0, P_1, ...
};

/// Kleinman policy iteration from K0 until ||P_k - P_{k-1}||_F < tol.
RiccatiSolution kleinman_iterate(const LqProblem& prob, const Matrix& K0, double tol = 1e-10,
                                 int max_iterations = 500);
/// K0 = 0, which needs A - lambda/2 I Hurwitz.
RiccatiSolution kleinman_iterate(const LqProblem& prob, double tol = 1e-10);

struct MaxEntLqPolicy {
  Matrix K;
  Matrix Sigma;
  Matrix P;
  double c = 0.0;

  GaussianPolicy policy() const { return GaussianPolicy(K, Sigma); }
  /// V_alpha(x) = 1/2 x'Px + c.
  double value(const Vector& x) const;
};

/// N(-Kx, alpha R^-1) and V_alpha = 1/2 x'Px - (alpha / 2 lambda) log((2 pi alpha)^m / det R).
/// lambda = 0 is rejected; evaluate a finite-horizon cost by simulation instead.
MaxEntLqPolicy maxent_policy(const LqProblem& prob, const RiccatiSolution& riccati);

/// Left side of the control-affine soft HJB at x for V = 1/2 x'Px + c;
/// zero for the optimal pair.
double soft_hjb_residual(const LqProblem& prob, const MaxEntLqPolicy& policy, const Vector& x);

struct QuantitativeGaps {
  double w2_sq;               ///< alpha tr(R^-1)
  double entropy_per_time;    ///< 1/2 log((2 pi alpha)^m / det R) + m/2
  double pure_cost_overhead;  ///< m alpha / (2 lambda); +inf when lambda = 0
};

QuantitativeGaps quantitative_gaps(const LqProblem& prob);

struct GaussianAtState {
  Vector mean;
  Matrix covariance;
};

/// Max-entropy policy of a control-affine problem with r = r1(x) + 1/2 u'Ru:
/// N(-R^-1 f2(x)' grad V0(x), alpha R^-1).
GaussianAtState control_affine_policy(const DynamicsModel& model,
                                      const std::function<Vector(const Vector&)>& grad_v0,
                                      const Matrix& R, double alpha, const Vector& x);

}  // namespace maxent_hjb
