#pragma once

#include <cstdint>

#include "maxent_hjb/dynamics.hpp"

namespace maxent_hjb::models {

/// Two-state Van der Pol benchmark field
///   f = (x2, -2(x1^2 - 1)x2 - x1 + (2 + sin(x1 x2))(u + u^3/3 + sin u)).
DynamicsModel van_der_pol();
/// r = |x| + |u| (Euclidean norm of the state).
RunningCost van_der_pol_running_cost();

/// Four-state modified Van der Pol oscillator coupled to a damped mode.
DynamicsModel van_der_pol_coupled();
/// r = ||x||_1 + |u|.
RunningCost van_der_pol_coupled_running_cost();

/// Control-affine variant of the Van der Pol field with input channel
/// f2(x) = (0, 2 + sin(x1 x2)).
DynamicsModel van_der_pol_affine();

/// f(x, u) = u in R^n (state-independent, one control per state).
DynamicsModel integrator(int n);

/// The control set U = [-1, 1]^m used by the benchmarks.
ControlBox unit_box(int m);

struct LinearSystem {
  Matrix A;
  Matrix B;
};

/// Random (A, B) generated the way the data-driven studies describe: Gaussian
/// A shifted by a multiple of the identity so that every eigenvalue has real
/// part at most -0.01, Gaussian B scaled by 0.1.
LinearSystem random_stable_system(int n, int m, std::uint64_t seed);

}  // namespace maxent_hjb::models
