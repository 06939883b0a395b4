#include <benchmark/benchmark.h>

#include "maxent_hjb/models.hpp"
#include "maxent_hjb/soft_hamiltonian.hpp"

using namespace maxent_hjb;

namespace {

SoftHamiltonian vdp(int nodes) {
  return SoftHamiltonian(models::van_der_pol(), models::van_der_pol_running_cost(), 1.0,
                         QuadratureGrid::gauss_legendre(models::unit_box(1), nodes));
}

void BM_ValueFromState(benchmark::State& state) {
  const auto ham = vdp(static_cast<int>(state.range(0)));
  Vector x(2), p(2);
  x << 0.5, -0.3;
  p << 0.2, 1.1;
  for (auto _ : state) benchmark::DoNotOptimize(ham.value(x, p));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ValueFromState)->Arg(16)->Arg(64)->Arg(256);

// Reuses the node samples, as the Godunov flux search does.
void BM_ValueFromSamples(benchmark::State& state) {
  const auto ham = vdp(static_cast<int>(state.range(0)));
  Vector x(2), p(2);
  x << 0.5, -0.3;
  p << 0.2, 1.1;
  const NodeSamples s = ham.sample(x);
  for (auto _ : state) benchmark::DoNotOptimize(ham.value(s, p));
}
BENCHMARK(BM_ValueFromSamples)->Arg(16)->Arg(64)->Arg(256);

void BM_Hessian(benchmark::State& state) {
  const auto ham = vdp(64);
  Vector x(2), p(2);
  x << 0.5, -0.3;
  p << 0.2, 1.1;
  for (auto _ : state) benchmark::DoNotOptimize(ham.evaluate(x, p, Derivatives::Hessian));
}
BENCHMARK(BM_Hessian);

void BM_PlanarTwoControls(benchmark::State& state) {
  const int nodes = static_cast<int>(state.range(0));
  const SoftHamiltonian ham(models::integrator(2),
                            RunningCost::generic([](const Vector&, const Vector& u) { return u.squaredNorm(); }),
                            0.5, QuadratureGrid::gauss_legendre(models::unit_box(2), nodes));
  Vector x = Vector::Zero(2), p(2);
  p << 0.4, -0.9;
  for (auto _ : state) benchmark::DoNotOptimize(ham.value(x, p));
}
BENCHMARK(BM_PlanarTwoControls)->Arg(8)->Arg(24);

}  // namespace
