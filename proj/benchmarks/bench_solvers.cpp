#include <string>

#include <benchmark/benchmark.h>

#include "maxent_hjb/adaptive_dp.hpp"
#include "maxent_hjb/godunov.hpp"
#include "maxent_hjb/hopf_lax.hpp"
#include "maxent_hjb/lq_maxent.hpp"
#include "maxent_hjb/matrix_io.hpp"
#include "maxent_hjb/models.hpp"

using namespace maxent_hjb;

namespace {

LqProblem fixture(const std::string& name) {
  const std::string dir = std::string(MAXENT_HJB_FIXTURE_DIR) + "/" + name + "/";
  return LqProblem{read_matrix(dir + "A.txt"), read_matrix(dir + "B.txt"), read_matrix(dir + "Q.txt"),
                   read_matrix(dir + "R.txt"), 1e-10, 1.0};
}

SoftHamiltonian vdp() {
  return SoftHamiltonian(models::van_der_pol(), models::van_der_pol_running_cost(), 1.0,
                         QuadratureGrid::gauss_legendre(models::unit_box(1), 16));
}

void BM_Kleinman(benchmark::State& state) {
  const auto prob = fixture(state.range(0) == 3 ? "lq_n3_m2" : "lq_n10_m10");
  for (auto _ : state) benchmark::DoNotOptimize(kleinman_iterate(prob, 1e-12));
}
BENCHMARK(BM_Kleinman)->Arg(3)->Arg(10)->Unit(benchmark::kMicrosecond);

void BM_GodunovStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Grid2D grid(-2.0, 2.0, -2.0, 2.0, n, n);
  const auto ham = vdp();
  for (auto _ : state) benchmark::DoNotOptimize(godunov_solve(ham, TerminalCost::l1_norm(), grid, 0.01, 0.5));
}
BENCHMARK(BM_GodunovStep)->Arg(41)->Arg(81)->Unit(benchmark::kMillisecond);

void BM_HopfLaxPoint(benchmark::State& state) {
  const auto ham = vdp();
  const TerminalSpec q{TerminalCost::l1_norm()};
  HopfLaxConfig cfg;
  cfg.ode_step = 0.025;
  Vector x(2);
  x << 0.7, -0.4;
  for (auto _ : state) benchmark::DoNotOptimize(hopf_lax_value(ham, q, x, 0.1, cfg));
}
BENCHMARK(BM_HopfLaxPoint)->Unit(benchmark::kMillisecond);

void BM_OnPolicyLearner(benchmark::State& state) {
  const auto prob = fixture("lq_n3_m2");
  LearnerConfig cfg;
  cfg.eps_stop = 0.5;
  cfg.horizon = 5.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(run_onpolicy(prob, Matrix::Zero(2, 3), Vector::Constant(3, 10.0), cfg));
}
BENCHMARK(BM_OnPolicyLearner)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
