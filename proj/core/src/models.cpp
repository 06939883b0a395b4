#include "maxent_hjb/models.hpp"

#include <cmath>

#include "maxent_hjb/rng.hpp"

namespace maxent_hjb::models {

namespace {

double input_shape(double u) { return u + u * u * u / 3.0 + std::sin(u); }

Eigen::ArrayXd input_shape(const Eigen::ArrayXd& u) { return u + u.cube() / 3.0 + u.sin(); }

// Rows 0-1 of the oscillator field for all controls at once.
void oscillator_rows(const Vector& x, const Matrix& controls, Matrix& out) {
  const Eigen::ArrayXd u = controls.row(0).transpose().array();
  out.row(0).setConstant(x[1]);
  out.row(1) = ((-2.0 * (x[0] * x[0] - 1.0) * x[1] - x[0]) +
                (2.0 + std::sin(x[0] * x[1])) * input_shape(u)).matrix().transpose();
}

}  // namespace

DynamicsModel van_der_pol() {
  DynamicsModel model = DynamicsModel::generic(2, 1, [](const Vector& x, const Vector& u) {
    Vector f(2);
    f[0] = x[1];
    f[1] = -2.0 * (x[0] * x[0] - 1.0) * x[1] - x[0] +
           (2.0 + std::sin(x[0] * x[1])) * input_shape(u[0]);
    return f;
  });
  model.with_batch([](const Vector& x, const Matrix& controls) {
    Matrix out(2, controls.cols());
    oscillator_rows(x, controls, out);
    return out;
  });
  return model;
}

RunningCost van_der_pol_running_cost() {
  RunningCost cost =
      RunningCost::generic([](const Vector& x, const Vector& u) { return x.norm() + std::abs(u[0]); });
  cost.with_batch([](const Vector& x, const Matrix& controls) {
    return Vector((controls.row(0).transpose().array().abs() + x.norm()).matrix());
  });
  return cost;
}

DynamicsModel van_der_pol_coupled() {
  DynamicsModel model = DynamicsModel::generic(4, 1, [](const Vector& x, const Vector& u) {
    Vector f(4);
    f[0] = x[1];
    f[1] = -2.0 * (x[0] * x[0] - 1.0) * x[1] - x[0] +
           (2.0 + std::sin(x[0] * x[1])) * input_shape(u[0]);
    f[2] = x[3];
    f[3] = -x[2] - 0.2 * x[3] + x[0];
    return f;
  });
  model.with_batch([](const Vector& x, const Matrix& controls) {
    Matrix out(4, controls.cols());
    oscillator_rows(x, controls, out);
    out.row(2).setConstant(x[3]);
    out.row(3).setConstant(-x[2] - 0.2 * x[3] + x[0]);
    return out;
  });
  return model;
}

RunningCost van_der_pol_coupled_running_cost() {
  RunningCost cost = RunningCost::generic(
      [](const Vector& x, const Vector& u) { return x.lpNorm<1>() + std::abs(u[0]); });
  cost.with_batch([](const Vector& x, const Matrix& controls) {
    return Vector((controls.row(0).transpose().array().abs() + x.lpNorm<1>()).matrix());
  });
  return cost;
}

DynamicsModel van_der_pol_affine() {
  return DynamicsModel::control_affine(
      2, 1,
      [](const Vector& x) {
        Vector f(2);
        f[0] = x[1];
        f[1] = -2.0 * (x[0] * x[0] - 1.0) * x[1] - x[0];
        return f;
      },
      [](const Vector& x) {
        Matrix g(2, 1);
        g(0, 0) = 0.0;
        g(1, 0) = 2.0 + std::sin(x[0] * x[1]);
        return g;
      });
}

DynamicsModel integrator(int n) {
  return DynamicsModel::linear(Matrix::Zero(n, n), Matrix::Identity(n, n));
}

ControlBox unit_box(int m) { return ControlBox::symmetric(m, 1.0); }

LinearSystem random_stable_system(int n, int m, std::uint64_t seed) {
  RandomSource rng(seed);
  LinearSystem sys{Matrix(n, n), Matrix(n, m)};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) sys.A(i, j) = rng.normal();
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) sys.B(i, j) = rng.normal();
  const double abscissa = Eigen::EigenSolver<Matrix>(sys.A).eigenvalues().real().maxCoeff();
  sys.A -= (abscissa + 0.01) * Matrix::Identity(n, n);
  sys.B *= 0.1;
  return sys;
}

}  // namespace maxent_hjb::models
