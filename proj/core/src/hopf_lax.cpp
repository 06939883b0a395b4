#include "maxent_hjb/hopf_lax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "maxent_hjb/errors.hpp"
#include "maxent_hjb/optimize.hpp"
#include "maxent_hjb/parallel.hpp"

namespace maxent_hjb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Rhs {
  double h;
  Vector grad_p;
  Vector grad_x;
};

Rhs characteristic_rhs(const SoftHamiltonian& ham, const Vector& gamma, const Vector& p) {
  const HamiltonianReport rep = ham.evaluate(gamma, p, Derivatives::Gradient);
  return {rep.value, *rep.gradient_p, ham.gradient_x(gamma, p)};
}

bool escaped(const Vector& gamma, const Vector& p, double bound) {
  return !gamma.allFinite() || !p.allFinite() || gamma.norm() > bound || p.norm() > bound;
}

double trapezoid(const std::vector<double>& s, const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t k = 1; k < s.size(); ++k) acc += 0.5 * (s[k] - s[k - 1]) * (y[k] + y[k - 1]);
  return acc;
}

bool lexicographic_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

}  // namespace

CharacteristicCurve integrate_characteristics(const SoftHamiltonian& ham, const Vector& x,
                                              const Vector& v, double t,
                                              const HopfLaxConfig& config) {
  if (!(t > 0.0)) throw InvalidArgument("integrate_characteristics: t must be > 0");
  if (!(config.ode_step > 0.0)) throw InvalidArgument("integrate_characteristics: ode_step must be > 0");
  const int n = ham.state_dim();
  if (x.size() != n || v.size() != n)
    throw DimensionMismatch("integrate_characteristics: x and v must have the state dimension");

  const int steps = std::max(4, static_cast<int>(std::ceil(t / config.ode_step - 1e-12)));
  const double h = t / steps;

  CharacteristicCurve curve;
  const std::size_t len = static_cast<std::size_t>(steps) + 1;
  curve.s.resize(len);
  curve.gamma.resize(len);
  curve.costate.resize(len);
  curve.hamiltonian.resize(len);
  curve.grad_p.resize(len);
  curve.grad_x.resize(len);
  for (int k = 0; k <= steps; ++k) curve.s[static_cast<std::size_t>(k)] = k == steps ? t : k * h;

  Vector gamma = x;
  Vector p = v;
  for (int k = steps;; --k) {
    const auto idx = static_cast<std::size_t>(k);
    curve.gamma[idx] = gamma;
    curve.costate[idx] = p;
    Rhs k1 = characteristic_rhs(ham, gamma, p);
    curve.hamiltonian[idx] = k1.h;
    curve.grad_p[idx] = k1.grad_p;
    curve.grad_x[idx] = k1.grad_x;
    if (k == 0) break;

    // Integrate backward in s: step -h.
    const double hs = -h;
    const Vector g2 = gamma + 0.5 * hs * k1.grad_p;
    const Vector p2 = p - 0.5 * hs * k1.grad_x;
    Rhs k2 = escaped(g2, p2, config.blow_up_norm) ? k1 : characteristic_rhs(ham, g2, p2);
    const Vector g3 = gamma + 0.5 * hs * k2.grad_p;
    const Vector p3 = p - 0.5 * hs * k2.grad_x;
    Rhs k3 = escaped(g3, p3, config.blow_up_norm) ? k2 : characteristic_rhs(ham, g3, p3);
    const Vector g4 = gamma + hs * k3.grad_p;
    const Vector p4 = p - hs * k3.grad_x;
    const bool stage_escaped = escaped(g2, p2, config.blow_up_norm) ||
                               escaped(g3, p3, config.blow_up_norm) ||
                               escaped(g4, p4, config.blow_up_norm);
    if (stage_escaped) {
      curve.blown_up = true;
      curve.blow_up_s = curve.s[idx];
      return curve;
    }
    Rhs k4 = characteristic_rhs(ham, g4, p4);
    gamma += hs / 6.0 * (k1.grad_p + 2.0 * k2.grad_p + 2.0 * k3.grad_p + k4.grad_p);
    p -= hs / 6.0 * (k1.grad_x + 2.0 * k2.grad_x + 2.0 * k3.grad_x + k4.grad_x);
    if (escaped(gamma, p, config.blow_up_norm)) {
      curve.blown_up = true;
      curve.blow_up_s = curve.s[idx - 1];
      return curve;
    }
  }
  return curve;
}

LegendreValue legendre_transform(const TerminalSpec& q, const Vector& v) {
  switch (q.cost.family()) {
    case TerminalCost::Family::L1Norm:
      return {v.lpNorm<Eigen::Infinity>() <= 1.0 ? 0.0 : kInf, false};
    case TerminalCost::Family::Quadratic: {
      const Matrix& M = q.cost.M();
      if (v.size() != M.rows()) throw DimensionMismatch("legendre_transform: dimension mismatch");
      return {0.5 * v.dot(M.llt().solve(v)), false};
    }
    case TerminalCost::Family::Generic:
      break;
  }
  if (!q.search_box) throw InvalidArgument("legendre_transform: generic q needs a search box");
  const ControlBox& box = *q.search_box;
  if (box.dim() != v.size()) throw DimensionMismatch("legendre_transform: search box dimension");
  const int per_dim = std::max(2, q.search_nodes_per_dim);
  const int n = box.dim();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  double best = -kInf;
  Vector x(n);
  while (true) {
    for (int d = 0; d < n; ++d) {
      const double frac = static_cast<double>(idx[static_cast<std::size_t>(d)]) / (per_dim - 1);
      x[d] = box.lower()[d] + frac * (box.upper()[d] - box.lower()[d]);
    }
    best = std::max(best, x.dot(v) - q.cost.eval(x));
    int d = 0;
    for (; d < n; ++d) {
      if (++idx[static_cast<std::size_t>(d)] < per_dim) break;
      idx[static_cast<std::size_t>(d)] = 0;
    }
    if (d == n) break;
  }
  return {best, true};
}

double hopf_lax_objective(const SoftHamiltonian& ham, const TerminalSpec& q, const Vector& x,
                          const Vector& v, double t, const HopfLaxConfig& config, bool* blown_up) {
  const CharacteristicCurve curve = integrate_characteristics(ham, x, v, t, config);
  if (blown_up) *blown_up = curve.blown_up;
  if (curve.blown_up) return kInf;
  const std::size_t len = curve.s.size();
  std::vector<double> integrand(len);
  if (config.formula == HopfLaxForm::MinForm) {
    for (std::size_t k = 0; k < len; ++k)
      integrand[k] = curve.costate[k].dot(curve.grad_p[k]) - curve.hamiltonian[k];
    return q.cost.eval(curve.gamma.front()) + trapezoid(curve.s, integrand);
  }
  const LegendreValue conj = legendre_transform(q, curve.costate.front());
  if (!std::isfinite(conj.value)) return kInf;
  for (std::size_t k = 0; k < len; ++k)
    integrand[k] = curve.hamiltonian[k] - curve.gamma[k].dot(curve.grad_x[k]);
  return -(x.dot(v) - conj.value - trapezoid(curve.s, integrand));
}

namespace {

ValueEstimate optimize_costate(const SoftHamiltonian& ham, const TerminalSpec& q, const Vector& x,
                               double t, const HopfLaxConfig& config, int random_starts) {
  const int n = ham.state_dim();
  if (x.size() != n) throw DimensionMismatch("hopf_lax_value: x has the wrong dimension");

  struct Start {
    Vector v;
    double step;
    int iterations;
  };
  const int warm_iters = config.warm_simplex_iters > 0 ? config.warm_simplex_iters : config.simplex_iters;
  std::vector<Start> starts;
  if (config.warm_start) {
    if (config.warm_start->size() != n) throw DimensionMismatch("hopf_lax_value: warm start dimension");
    starts.push_back({*config.warm_start, config.warm_simplex_step, warm_iters});
  }
  RandomSource rng(config.seed);
  for (int s = 0; s < random_starts; ++s) {
    Vector dir(n);
    for (int i = 0; i < n; ++i) dir[i] = rng.normal();
    const double norm = dir.norm();
    const double radius = config.start_radius * std::pow(rng.uniform(), 1.0 / n);
    starts.push_back({norm > 0.0 ? Vector(dir * (radius / norm)) : Vector(Vector::Zero(n)),
                      config.simplex_step, config.simplex_iters});
  }
  if (starts.empty()) throw InvalidArgument("hopf_lax_value: no start points");

  struct StartResult {
    SimplexResult best;
    int evaluations = 0;
    int blown = 0;
  };
  std::vector<StartResult> results(starts.size());
  parallel_for(0, starts.size(), [&](std::size_t i) {
    StartResult& r = results[i];
    auto objective = [&](const Vector& v) {
      bool blown = false;
      const double val = hopf_lax_objective(ham, q, x, v, t, config, &blown);
      ++r.evaluations;
      if (blown) ++r.blown;
      return val;
    };
    r.best = nelder_mead(objective, starts[i].v, starts[i].step, starts[i].iterations);
  });

  int evaluations = 0;
  int blown = 0;
  const SimplexResult* best = nullptr;
  for (const auto& r : results) {
    evaluations += r.evaluations;
    blown += r.blown;
    if (!std::isfinite(r.best.value)) continue;
    if (best == nullptr || r.best.value < best->value ||
        (r.best.value == best->value && lexicographic_less(r.best.x, best->x)))
      best = &r.best;
  }
  if (best == nullptr) {
    if (blown == evaluations)
      throw AllCharacteristicsBlewUp("hopf_lax_value: every characteristic curve blew up");
    throw InfeasibleTransform("hopf_lax_value: Legendre transform infinite at every probed costate");
  }

  ValueEstimate est;
  est.value = config.formula == HopfLaxForm::MinForm ? best->value : -best->value;
  est.argmin_v = best->x;
  est.costate_at_t = best->x;
  est.curve_evaluations = evaluations;
  est.blown_up_fraction = evaluations > 0 ? static_cast<double>(blown) / evaluations : 0.0;
  return est;
}

}  // namespace

ValueEstimate hopf_lax_value(const SoftHamiltonian& ham, const TerminalSpec& q, const Vector& x,
                             double t, const HopfLaxConfig& config) {
  if (!(t > 0.0)) throw InvalidArgument("hopf_lax_value: t must be > 0");
  if (config.n_starts < 1) throw InvalidArgument("hopf_lax_value: n_starts must be >= 1");
  if (!(config.start_radius > 0.0)) throw InvalidArgument("hopf_lax_value: start_radius must be > 0");
  return optimize_costate(ham, q, x, t, config, config.n_starts);
}

Vector synthesize_feedback(const SoftHamiltonian& ham, const ValueEstimate& estimate,
                           const Vector& x) {
  if (estimate.blown_up_fraction >= 1.0)
    throw AllCharacteristicsBlewUp("synthesize_feedback: estimate has no surviving curve");
  return ham.boltzmann_density(x, estimate.costate_at_t);
}

Vector sample_feedback(const SoftHamiltonian& ham, const Vector& x, const Vector& costate,
                       const Vector& density, RandomSource& rng) {
  const QuadratureGrid& grid = ham.grid();
  const ControlBox& box = grid.box();
  if (density.size() != grid.size()) throw DimensionMismatch("sample_feedback: density size");
  if (grid.control_dim() == 1) {
    const Vector& nodes = grid.axis_nodes(0);
    const Eigen::Index N = nodes.size();
    const Vector mass = grid.weights().cwiseProduct(density);
    const double total = mass.sum();
    double target = rng.uniform() * total;
    Eigen::Index i = 0;
    for (; i < N - 1; ++i) {
      if (target < mass[i]) break;
      target -= mass[i];
    }
    const double lo = i == 0 ? box.lower()[0] : 0.5 * (nodes[i - 1] + nodes[i]);
    const double hi = i == N - 1 ? box.upper()[0] : 0.5 * (nodes[i] + nodes[i + 1]);
    Vector u(1);
    u[0] = rng.uniform(lo, hi);
    return u;
  }
  const NodeSamples s = ham.sample(x);
  const double l_min = (s.f.transpose() * costate + s.r).minCoeff();
  const int m = grid.control_dim();
  Vector u(m);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (int d = 0; d < m; ++d) u[d] = rng.uniform(box.lower()[d], box.upper()[d]);
    const double L = costate.dot(ham.model().eval(x, u)) + ham.running().eval(x, u);
    if (std::log(rng.uniform()) <= -(L - l_min) / ham.alpha()) return u;
  }
  // Sharply peaked density: fall back to a categorical draw over grid nodes.
  const Vector mass = grid.weights().cwiseProduct(density);
  double target = rng.uniform() * mass.sum();
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    if (target < mass[i]) return grid.nodes().col(i);
    target -= mass[i];
  }
  return grid.nodes().col(mass.size() - 1);
}

GridFunction hopf_lax_surface(const SoftHamiltonian& ham, const TerminalSpec& q,
                              const Grid2D& grid, double t, const HopfLaxConfig& config,
                              const std::optional<Vector>& base_point) {
  const int n = ham.state_dim();
  if (n < 2) throw DimensionMismatch("hopf_lax_surface: needs a state of dimension >= 2");
  if (!(t > 0.0)) throw InvalidArgument("hopf_lax_surface: t must be > 0");
  if (config.n_starts < 1) throw InvalidArgument("hopf_lax_surface: n_starts must be >= 1");
  if (config.surface_restarts < 0) throw InvalidArgument("hopf_lax_surface: surface_restarts must be >= 0");
  const Vector base = base_point.value_or(Vector::Zero(n));
  if (base.size() != n) throw DimensionMismatch("hopf_lax_surface: base point dimension");
  auto point = [&](int i, int j) {
    Vector x = base;
    x[0] = grid.x(i);
    x[1] = grid.y(j);
    return x;
  };

  Eigen::MatrixXd values(grid.nx(), grid.ny());
  std::vector<Vector> column_optimum(static_cast<std::size_t>(grid.nx()));
  HopfLaxConfig cfg = config;
  for (int i = 0; i < grid.nx(); ++i) {
    const ValueEstimate est =
        optimize_costate(ham, q, point(i, 0), t, cfg, i == 0 ? config.n_starts : config.surface_restarts);
    values(i, 0) = est.value;
    column_optimum[static_cast<std::size_t>(i)] = est.argmin_v;
    cfg.warm_start = est.argmin_v;
  }
  parallel_for(0, static_cast<std::size_t>(grid.nx()), [&](std::size_t row) {
    const int i = static_cast<int>(row);
    HopfLaxConfig rcfg = config;
    rcfg.warm_start = column_optimum[row];
    for (int j = 1; j < grid.ny(); ++j) {
      const ValueEstimate est = optimize_costate(ham, q, point(i, j), t, rcfg, config.surface_restarts);
      values(i, j) = est.value;
      rcfg.warm_start = est.argmin_v;
    }
  });
  return GridFunction(grid, std::move(values), t);
}

Trajectory receding_horizon_control(const SoftHamiltonian& ham, const TerminalSpec& q,
                                    const Vector& x0, double total_T, double window_T,
                                    const HopfLaxConfig& config,
                                    const RecedingHorizonOptions& options) {
  if (!(total_T > 0.0) || !(window_T > 0.0))
    throw InvalidArgument("receding_horizon_control: horizons must be > 0");
  const double windows = std::round(total_T / window_T);
  if (windows < 1.0 || std::abs(windows * window_T - total_T) > 1e-9)
    throw InvalidArgument("receding_horizon_control: window_T must divide total_T");
  if (!(options.dt > 0.0) || !(options.control_interval > 0.0))
    throw InvalidArgument("receding_horizon_control: dt and control_interval must be > 0");

  const double h = options.dt * options.dt;
  const auto total_steps = static_cast<std::size_t>(std::llround(total_T / h));
  const auto interval_steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(options.control_interval / h)));

  SampledSimulator sim(ham.model(), x0, h, options.seed);
  Trajectory traj;
  traj.seed = options.seed;
  HopfLaxConfig cfg = config;
  Vector density;
  Vector costate;
  for (std::size_t k = 0;; ++k) {
    const double s = static_cast<double>(k) * h;
    if (k % interval_steps == 0 && k < total_steps) {
      const double window = std::floor(s / window_T + 1e-9);
      const double remaining = (window + 1.0) * window_T - s;
      const ValueEstimate est = hopf_lax_value(ham, q, sim.state(), remaining, cfg);
      costate = est.costate_at_t;
      density = synthesize_feedback(ham, est, sim.state());
      cfg.warm_start = est.argmin_v;
    }
    const Vector u = sample_feedback(ham, sim.state(), costate, density, sim.rng());
    traj.times.push_back(s);
    traj.states.push_back(sim.state());
    traj.controls.push_back(u);
    if (k == total_steps) break;
    sim.advance(u);
  }
  return traj;
}

double accumulated_running_cost(const Trajectory& traj, const RunningCost& running) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k)
    acc += (traj.times[k + 1] - traj.times[k]) * running.eval(traj.states[k], traj.controls[k]);
  return acc;
}

}  // namespace maxent_hjb
