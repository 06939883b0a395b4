#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>

#include "maxent_hjb/adaptive_dp.hpp"
#include "maxent_hjb/godunov.hpp"
#include "maxent_hjb/hopf_lax.hpp"
#include "maxent_hjb/lq_maxent.hpp"
#include "maxent_hjb/matrix_io.hpp"
#include "maxent_hjb/models.hpp"
#include "maxent_hjb/soft_hamiltonian.hpp"

#ifndef MAXENT_HJB_VERSION
#define MAXENT_HJB_VERSION "unknown"
#endif

namespace maxent_hjb::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

StageError::StageError(const std::string& command, const std::string& stage,
                       const std::string& what)
    : std::runtime_error(command + ": stage '" + stage + "' failed: " + what), stage_(stage) {}

std::string library_version() { return MAXENT_HJB_VERSION; }

namespace {

json to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

// JSON has no infinity; non-finite metrics are written as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, OutputSet& out) : cfg_(cfg), out_(out) {}

  template <class F>
  auto stage(const std::string& name, F&& body) -> decltype(body()) {
    try {
      return body();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(cfg_.command, name, e.what());
    }
  }

  void ham_sweep();
  void hjb_compare();
  void vdp_control();
  void lq_learner(bool off_policy);
  void lq_exact();

 private:
  LqProblem load_problem();
  Vector initial_state(int n);
  void write_csv(const std::string& name, const std::function<void(std::ostream&)>& body);

  const ExperimentConfig& cfg_;
  OutputSet& out_;
};

void Runner::write_csv(const std::string& name, const std::function<void(std::ostream&)>& body) {
  stage("write " + name, [&] {
    std::ofstream os(out_.file(name));
    if (!os) throw std::runtime_error("cannot open " + (out_.dir() / name).string());
    body(os);
    if (!os) throw std::runtime_error("write to " + name + " failed");
  });
}

LqProblem Runner::load_problem() {
  return stage("load fixture", [&] {
    const fs::path dir = cfg_.text("fixture");
    LqProblem prob;
    prob.A = read_matrix((dir / "A.txt").string());
    prob.B = read_matrix((dir / "B.txt").string());
    prob.Q = read_matrix((dir / "Q.txt").string());
    prob.R = read_matrix((dir / "R.txt").string());
    prob.lambda = cfg_.real("lambda");
    prob.alpha = cfg_.real("alpha");
    for (const auto& w : prob.validate()) std::fprintf(stderr, "warning: %s\n", w.c_str());
    return prob;
  });
}

Vector Runner::initial_state(int n) {
  const auto v = cfg_.reals("x0");
  if (v.size() == 1) return Vector::Constant(n, v[0]);
  if (static_cast<int>(v.size()) != n)
    throw ConfigError("x0 has " + std::to_string(v.size()) + " entries, the system has " +
                      std::to_string(n) + " states");
  return Eigen::Map<const Vector>(v.data(), n);
}

void Runner::ham_sweep() {
  const bool vdp = cfg_.text("model") == "vdp";
  const auto alphas = cfg_.reals("alphas");
  const int points = static_cast<int>(cfg_.integer("p_points"));
  const double p_min = cfg_.real("p_min");
  const double p_max = cfg_.real("p_max");

  Vector x(1);
  x << 0.0;
  if (vdp) {
    const auto xs = cfg_.reals("x");
    if (xs.size() != 2) throw ConfigError("x must have 2 entries for the vdp model");
    x = Eigen::Map<const Vector>(xs.data(), 2);
  }
  const QuadratureGrid grid =
      QuadratureGrid::gauss_legendre(models::unit_box(1), static_cast<int>(cfg_.integer("nodes")));
  const SoftHamiltonian base =
      vdp ? SoftHamiltonian(models::van_der_pol(), models::van_der_pol_running_cost(), 1.0, grid)
          : SoftHamiltonian(models::integrator(1),
                            RunningCost::generic([](const Vector&, const Vector&) { return 0.0; }),
                            1.0, grid);
  const double log_volume = std::log(grid.box().volume());

  struct Row {
    double alpha, p, h, h_tilde, h0;
  };
  std::vector<Row> rows;
  double worst_gap = 0.0;
  bool monotone = true;
  stage("evaluate", [&] {
    for (int k = 0; k < points; ++k) {
      const double s = points == 1 ? p_min : p_min + (p_max - p_min) * k / (points - 1);
      Vector p(vdp ? 2 : 1);
      if (vdp)
        p << cfg_.real("p1"), s;
      else
        p << s;
      const double h0 = base.standard_value(x, p);
      // H_tilde is nonincreasing in alpha: it rises toward H_0 as alpha drops.
      double previous = -INFINITY;
      double previous_alpha = INFINITY;
      for (double a : alphas) {
        const double h = base.with_alpha(a).value(x, p);
        const double ht = h - a * log_volume;
        if (a < previous_alpha && ht < previous - 1e-12) monotone = false;
        previous = ht;
        previous_alpha = a;
        rows.push_back({a, s, h, ht, h0});
      }
      worst_gap = std::max(worst_gap, std::abs(previous - h0));
    }
  });

  write_csv("hamiltonian.csv", [&](std::ostream& os) {
    os << "alpha,p,H_alpha,H_tilde,H_0\n";
    char line[160];
    for (const Row& r : rows) {
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.alpha, r.p, r.h,
                    r.h_tilde, r.h0);
      os << line;
    }
  });
  json summary;
  summary["model"] = vdp ? "vdp" : "integrator";
  summary["rows"] = rows.size();
  summary["h_tilde_nonincreasing_in_alpha"] = monotone;
  summary["last_alpha_gap_to_H0"] = worst_gap;
  stage("write summary", [&] { out_.write_json("summary.json", summary); });
}

void Runner::hjb_compare() {
  const double lo = cfg_.real("domain_min");
  const double hi = cfg_.real("domain_max");
  if (!(hi > lo)) throw ConfigError("domain_max must exceed domain_min");
  const Grid2D grid(lo, hi, lo, hi, static_cast<int>(cfg_.integer("nx")),
                    static_cast<int>(cfg_.integer("ny")));
  const double t = cfg_.real("t");
  const SoftHamiltonian ham(
      models::van_der_pol(), models::van_der_pol_running_cost(), cfg_.real("alpha"),
      QuadratureGrid::gauss_legendre(models::unit_box(1), static_cast<int>(cfg_.integer("nodes"))));

  const GridFunction godunov = stage("godunov", [&] {
    return godunov_solve(ham, TerminalCost::l1_norm(), grid, t, cfg_.real("cfl"));
  });

  HopfLaxConfig hl;
  hl.formula = cfg_.text("formula") == "max" ? HopfLaxForm::MaxForm : HopfLaxForm::MinForm;
  hl.n_starts = static_cast<int>(cfg_.integer("n_starts"));
  hl.start_radius = cfg_.real("start_radius");
  hl.simplex_iters = static_cast<int>(cfg_.integer("simplex_iters"));
  hl.warm_simplex_iters = static_cast<int>(cfg_.integer("warm_simplex_iters"));
  hl.warm_simplex_step = cfg_.real("warm_simplex_step");
  hl.surface_restarts = static_cast<int>(cfg_.integer("surface_restarts"));
  hl.ode_step = cfg_.real("ode_step");
  hl.seed = cfg_.seed;
  const TerminalSpec q{TerminalCost::l1_norm(), std::nullopt, 201};
  const GridFunction hopf = stage("hopf-lax", [&] { return hopf_lax_surface(ham, q, grid, t, hl); });

  const Comparison all = compare_solutions(godunov, hopf);
  const Comparison interior = compare_solutions(godunov, hopf, cfg_.real("margin"));
  const GridFunction diff(grid, godunov.values - hopf.values, t);

  stage("write grids", [&] {
    write_grid_csv(out_.file("godunov.csv").string(), godunov);
    write_grid_csv(out_.file("hopf_lax.csv").string(), hopf);
    write_grid_csv(out_.file("difference.csv").string(), diff, "diff");
  });
  json summary;
  summary["t"] = t;
  summary["nx"] = grid.nx();
  summary["ny"] = grid.ny();
  summary["rel_pct"] = all.rel_pct;
  summary["max_abs_diff"] = all.max_abs_diff;
  summary["sup_norm_hopf_lax"] = all.sup_norm_b;
  summary["interior_rel_pct"] = interior.rel_pct;
  summary["interior_max_abs_diff"] = interior.max_abs_diff;
  stage("write summary", [&] { out_.write_json("summary.json", summary); });
}

void Runner::vdp_control() {
  const Vector x0 = initial_state(4);
  const double total_T = cfg_.real("total_T");
  const double dt = cfg_.real("dt");
  const SoftHamiltonian ham(
      models::van_der_pol_coupled(), models::van_der_pol_coupled_running_cost(), cfg_.real("alpha"),
      QuadratureGrid::gauss_legendre(models::unit_box(1), static_cast<int>(cfg_.integer("nodes"))));

  HopfLaxConfig hl;
  hl.n_starts = static_cast<int>(cfg_.integer("n_starts"));
  hl.start_radius = cfg_.real("start_radius");
  hl.simplex_iters = static_cast<int>(cfg_.integer("simplex_iters"));
  hl.warm_simplex_iters = static_cast<int>(cfg_.integer("warm_simplex_iters"));
  hl.ode_step = cfg_.real("ode_step");
  hl.seed = cfg_.seed;
  RecedingHorizonOptions opts;
  opts.dt = dt;
  opts.control_interval = cfg_.real("control_interval");
  opts.seed = cfg_.seed;
  const TerminalSpec q{TerminalCost::l1_norm(), std::nullopt, 201};

  const Trajectory controlled = stage("receding horizon", [&] {
    return receding_horizon_control(ham, q, x0, total_T, cfg_.real("window_T"), hl, opts);
  });
  const Trajectory free_run = stage("uncontrolled", [&] {
    const double h = dt * dt;
    const auto steps = static_cast<std::size_t>(std::llround(total_T / h));
    SampledSimulator sim(ham.model(), x0, h, cfg_.seed, 1e8);
    const Vector u = Vector::Zero(1);
    Trajectory traj;
    traj.seed = cfg_.seed;
    for (std::size_t k = 0; k < steps; ++k) {
      traj.append(sim.time(), sim.state(), u);
      sim.advance(u);
    }
    traj.append(sim.time(), sim.state(), u);
    return traj;
  });

  write_csv("controlled.csv", [&](std::ostream& os) { write_trajectory_csv(os, controlled); });
  write_csv("uncontrolled.csv", [&](std::ostream& os) { write_trajectory_csv(os, free_run); });

  const RunningCost& r = ham.running();
  const double band = cfg_.real("band");
  json summary;
  summary["total_running_cost"] = accumulated_running_cost(controlled, r);
  summary["uncontrolled_running_cost"] = accumulated_running_cost(free_run, r);
  summary["settling_time"] = number(settling_time(controlled, band));
  summary["uncontrolled_settling_time"] = number(settling_time(free_run, band));
  summary["final_state_l1"] = controlled.states.back().lpNorm<1>();
  summary["uncontrolled_final_state_l1"] = free_run.states.back().lpNorm<1>();
  stage("write summary", [&] { out_.write_json("summary.json", summary); });
}

void Runner::lq_learner(bool off_policy) {
  const LqProblem prob = load_problem();
  const Vector x0 = initial_state(prob.n());
  LearnerConfig lc;
  lc.window = cfg_.real("window");
  lc.n_sub = static_cast<int>(cfg_.integer("n_sub"));
  lc.eps_stop = cfg_.real("eps_stop");
  lc.max_iters = static_cast<int>(cfg_.integer("max_iters"));
  lc.seed = cfg_.seed;
  lc.rank_tol = cfg_.real("rank_tol");
  lc.window_budget_factor = static_cast<int>(cfg_.integer("window_budget_factor"));
  lc.horizon = cfg_.real("horizon");
  lc.settling_band = cfg_.real("band");
  lc.quadrature =
      cfg_.text("quadrature") == "trapezoid" ? WindowQuadrature::Trapezoid : WindowQuadrature::Left;
  lc.exploration =
      cfg_.text("exploration") == "sinusoid" ? Exploration::Sinusoid : Exploration::Gaussian;
  lc.sinusoid_amplitude = cfg_.real("sinusoid_amplitude");
  lc.sinusoid_omega_bar = cfg_.real("sinusoid_omega_bar");
  lc.sinusoid_terms = static_cast<int>(cfg_.integer("sinusoid_terms"));
  lc.record_trajectory = cfg_.flag("record_trajectory");

  const Matrix K0 = Matrix::Zero(prob.m(), prob.n());
  const LearnerReport rep = stage("learn", [&] {
    return off_policy ? run_offpolicy(prob, K0, x0, lc) : run_onpolicy(prob, K0, x0, lc);
  });
  const RiccatiSolution exact = stage("kleinman reference", [&] { return kleinman_iterate(prob); });

  json iterates = json::array();
  for (const auto& it : rep.iterates) iterates.push_back({{"P", to_json(it.P)}, {"K_next", to_json(it.K_next)}});
  json report;
  report["iterates"] = iterates;
  report["samples_per_iter"] = rep.samples_per_iter;
  report["total_samples"] = rep.total_samples;
  report["learning_time"] = rep.learning_time;
  report["settling_time"] = number(rep.settling_time);
  report["total_running_cost"] = rep.total_running_cost;
  report["converged"] = rep.converged;
  report["final_P"] = to_json(rep.final_P);
  report["final_K"] = to_json(rep.final_K);
  report["reference_P"] = to_json(exact.P);
  report["reference_K"] = to_json(exact.K);
  stage("write report", [&] { out_.write_json("report.json", report); });
  if (rep.trajectory)
    write_csv("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, *rep.trajectory); });

  json summary;
  summary["converged"] = rep.converged;
  summary["iterations"] = rep.iterates.size();
  summary["samples"] = rep.total_samples;
  summary["learning_time"] = rep.learning_time;
  summary["settling_time"] = number(rep.settling_time);
  summary["total_running_cost"] = rep.total_running_cost;
  summary["rel_err_P"] = (rep.final_P - exact.P).norm() / exact.P.norm();
  summary["rel_err_K"] = (rep.final_K - exact.K).norm() / exact.K.norm();
  stage("write summary", [&] { out_.write_json("summary.json", summary); });
}

void Runner::lq_exact() {
  const LqProblem prob = load_problem();
  const RiccatiSolution sol = stage("kleinman", [&] { return kleinman_iterate(prob, cfg_.real("tol")); });
  const MaxEntLqPolicy pol = stage("policy", [&] { return maxent_policy(prob, sol); });
  const QuantitativeGaps gaps = quantitative_gaps(prob);
  stage("write matrices", [&] {
    write_matrix(out_.file("P.txt").string(), sol.P);
    write_matrix(out_.file("K.txt").string(), sol.K);
    write_matrix(out_.file("Sigma.txt").string(), pol.Sigma);
  });
  json summary;
  summary["iterations"] = sol.iterations;
  summary["are_residual"] = sol.residual;
  summary["value_offset_c"] = pol.c;
  summary["w2_sq"] = gaps.w2_sq;
  summary["entropy_per_time"] = gaps.entropy_per_time;
  summary["pure_cost_overhead"] = number(gaps.pure_cost_overhead);
  stage("write summary", [&] { out_.write_json("summary.json", summary); });
}

}  // namespace

RunManifest run(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  OutputSet out(config.output_dir);
  Runner runner(config, out);
  RunManifest manifest;
  manifest.command = config.command;
  manifest.version = library_version();
  manifest.config = config;
  try {
    const std::string& c = config.command;
    if (c == "ham-sweep")
      runner.ham_sweep();
    else if (c == "hjb-compare")
      runner.hjb_compare();
    else if (c == "vdp-control")
      runner.vdp_control();
    else if (c == "lq-onpolicy")
      runner.lq_learner(false);
    else if (c == "lq-offpolicy")
      runner.lq_learner(true);
    else if (c == "lq-exact")
      runner.lq_exact();
    else
      throw ConfigError("unknown command '" + c + "'");

    manifest.files = runner.stage("hash outputs", [&] { return out.entries(); });
    manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json doc;
    doc["command"] = manifest.command;
    doc["version"] = manifest.version;
    doc["seed"] = config.seed;
    doc["config"] = json(config.values);
    doc["duration_seconds"] = manifest.duration_seconds;
    json files = json::array();
    for (const auto& f : manifest.files)
      files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    doc["files"] = files;
    runner.stage("write manifest", [&] { out.write_json("manifest.json", doc); });
  } catch (...) {
    out.discard();
    throw;
  }
  return manifest;
}

}  // namespace maxent_hjb::cli
