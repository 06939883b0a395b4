#include "maxent_hjb/soft_hamiltonian.hpp"

#include <cmath>
#include <limits>

#include "maxent_hjb/errors.hpp"
#include "maxent_hjb/optimize.hpp"

namespace maxent_hjb {

namespace {

struct Weighted {
  Vector exponent_weights;  // w_i exp(-(L_i - L_min) / alpha)
  double l_min;
  double sum;
};

Weighted weigh(const NodeSamples& s, const Vector& p, double alpha, const QuadratureGrid& grid) {
  if (p.size() != s.f.rows()) throw DimensionMismatch("soft Hamiltonian: costate dimension mismatch");
  const Vector L = s.f.transpose() * p + s.r;
  const double l_min = L.minCoeff();
  if (!std::isfinite(l_min)) throw Error("soft Hamiltonian: non-finite Lagrangian at a grid node");
  Weighted out;
  out.l_min = l_min;
  out.exponent_weights = (grid.weights().array() * (-(L.array() - l_min) / alpha).exp()).matrix();
  out.sum = out.exponent_weights.sum();
  return out;
}

}  // namespace

SoftHamiltonian::SoftHamiltonian(DynamicsModel model, RunningCost running, double alpha,
                                 QuadratureGrid grid)
    : model_(std::move(model)), running_(std::move(running)), alpha_(alpha), grid_(std::move(grid)) {
  if (!(alpha_ > 0.0)) throw InvalidArgument("soft Hamiltonian: alpha must be > 0");
  if (grid_.control_dim() != model_.control_dim())
    throw DimensionMismatch("soft Hamiltonian: grid dimension differs from control dimension");
}

SoftHamiltonian SoftHamiltonian::with_alpha(double alpha) const {
  return SoftHamiltonian(model_, running_, alpha, grid_);
}

SoftHamiltonian SoftHamiltonian::with_grid(QuadratureGrid grid) const {
  return SoftHamiltonian(model_, running_, alpha_, std::move(grid));
}

NodeSamples SoftHamiltonian::sample(const Vector& x) const {
  return {model_.eval_columns(x, grid_.nodes()), running_.eval_columns(x, grid_.nodes())};
}

double SoftHamiltonian::value(const Vector& x, const Vector& p) const {
  return value(sample(x), p);
}

double SoftHamiltonian::value(const NodeSamples& samples, const Vector& p) const {
  const Weighted w = weigh(samples, p, alpha_, grid_);
  return alpha_ * std::log(w.sum) - w.l_min;
}

HamiltonianReport SoftHamiltonian::evaluate(const Vector& x, const Vector& p,
                                            Derivatives derivatives) const {
  return evaluate(sample(x), p, derivatives);
}

HamiltonianReport SoftHamiltonian::evaluate(const NodeSamples& samples, const Vector& p,
                                            Derivatives derivatives) const {
  const Weighted w = weigh(samples, p, alpha_, grid_);
  HamiltonianReport report;
  report.log_partition = std::log(w.sum);
  report.value = alpha_ * report.log_partition - w.l_min;
  if (derivatives == Derivatives::None) return report;
  // Probability weights of the Boltzmann density on the grid.
  const Vector prob = w.exponent_weights / w.sum;
  const Vector mean = samples.f * prob;
  report.gradient_p = -mean;
  if (derivatives == Derivatives::Hessian) {
    const Matrix centered = samples.f.colwise() - mean;
    Matrix cov = centered * prob.asDiagonal() * centered.transpose();
    cov = 0.5 * (cov + cov.transpose());
    report.hessian_p = cov / alpha_;
  }
  return report;
}

Vector SoftHamiltonian::gradient_x(const Vector& x, const Vector& p) const {
  const double h = 1e-6 * (1.0 + x.norm());
  Vector grad(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double up = value(xp, p);
    xp[i] = x[i] - h;
    const double down = value(xp, p);
    xp[i] = x[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

Vector SoftHamiltonian::boltzmann_density(const Vector& x, const Vector& p) const {
  const NodeSamples s = sample(x);
  const Vector L = s.f.transpose() * p + s.r;
  const double l_min = L.minCoeff();
  const Vector g = (-(L.array() - l_min) / alpha_).exp();
  return g / grid_.weights().dot(g);
}

double SoftHamiltonian::standard_value(const Vector& x, const Vector& p) const {
  const NodeSamples s = sample(x);
  const Vector L = s.f.transpose() * p + s.r;
  Eigen::Index best = 0;
  double best_value = L.minCoeff(&best);
  Vector u = grid_.nodes().col(best);

  auto lagrangian = [&](const Vector& v) { return p.dot(model_.eval(x, v)) + running_.eval(x, v); };

  // Bracket each coordinate by the neighbouring axis nodes (or the box edge).
  const int m = grid_.control_dim();
  const ControlBox& box = grid_.box();
  auto bracket = [&](int d, double coord, double& lo, double& hi) {
    const Vector& axis = grid_.axis_nodes(d);
    Eigen::Index k = 0;
    (axis.array() - coord).abs().minCoeff(&k);
    lo = k == 0 ? box.lower()[d] : axis[k - 1];
    hi = k == axis.size() - 1 ? box.upper()[d] : axis[k + 1];
  };

  const int sweeps = m == 1 ? 1 : 4;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (int d = 0; d < m; ++d) {
      double lo = 0.0, hi = 0.0;
      bracket(d, u[d], lo, hi);
      Vector trial = u;
      const ScalarMinimum r = golden_section_minimize(
          [&](double c) {
            trial[d] = c;
            return lagrangian(trial);
          },
          lo, hi, 60);
      if (r.value < best_value) {
        best_value = r.value;
        u[d] = r.x;
      }
    }
  }
  return -best_value;
}

HamiltonianReport soft_hamiltonian(const DynamicsModel& model, const CostModel& cost,
                                   const Vector& x, const Vector& p, double alpha,
                                   const QuadratureGrid& grid, Derivatives derivatives) {
  return SoftHamiltonian(model, cost.running, alpha, grid).evaluate(x, p, derivatives);
}

Vector boltzmann_density(const DynamicsModel& model, const CostModel& cost, const Vector& x,
                         const Vector& p, double alpha, const QuadratureGrid& grid) {
  return SoftHamiltonian(model, cost.running, alpha, grid).boltzmann_density(x, p);
}

double standard_hamiltonian(const DynamicsModel& model, const CostModel& cost, const Vector& x,
                            const Vector& p, const QuadratureGrid& grid) {
  // alpha does not enter H_0; any positive value builds the evaluator.
  return SoftHamiltonian(model, cost.running, 1.0, grid).standard_value(x, p);
}

double grid_entropy(const QuadratureGrid& grid, const Vector& density) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < density.size(); ++i) {
    if (density[i] > 0.0) h -= grid.weights()[i] * density[i] * std::log(density[i]);
  }
  return h;
}

std::vector<LaplacePoint> laplace_gap(const DynamicsModel& model, const CostModel& cost,
                                      const Vector& x, const Vector& p,
                                      const std::vector<double>& alphas,
                                      const QuadratureGrid& grid) {
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0)) throw InvalidArgument("laplace_gap: every alpha must be > 0");
    if (i > 0 && !(alphas[i] < alphas[i - 1]))
      throw InvalidArgument("laplace_gap: alphas must be sorted decreasing");
  }
  const double log_volume = std::log(grid.box().volume());
  SoftHamiltonian ham(model, cost.running, alphas.empty() ? 1.0 : alphas.front(), grid);
  const NodeSamples samples = ham.sample(x);
  std::vector<LaplacePoint> out;
  out.reserve(alphas.size());
  for (double a : alphas) {
    const double h = ham.with_alpha(a).value(samples, p);
    out.push_back({a, h, h - a * log_volume});
  }
  return out;
}

QuadratureCheck check_quadrature_convergence(const SoftHamiltonian& ham, const Vector& x,
                                             const Vector& p) {
  QuadratureCheck check;
  check.coarse = ham.value(x, p);
  check.fine = ham.with_grid(ham.grid().refined(2 * ham.grid().nodes_per_dim())).value(x, p);
  check.relative_gap = std::abs(check.fine - check.coarse) / std::max(1.0, std::abs(check.fine));
  check.converged = check.relative_gap <= 1e-6;
  return check;
}

}  // namespace maxent_hjb
