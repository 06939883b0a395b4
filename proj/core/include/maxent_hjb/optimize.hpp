#pragma once

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace maxent_hjb {

struct ScalarMinimum {
  double x;
  double value;
};

/// Golden-section search for a minimum of f on [a, b]. Each iteration
/// shrinks the bracket by 0.618; both endpoints are also compared so a
/// monotone f returns its boundary minimum.
template <typename F>
ScalarMinimum golden_section_minimize(F&& f, double a, double b, int iterations) {
  constexpr double kInvPhi = 0.6180339887498949;
  const double fa = f(a);
  const double fb = f(b);
  double lo = a;
  double hi = b;
  double c = hi - kInvPhi * (hi - lo);
  double d = lo + kInvPhi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < iterations; ++i) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kInvPhi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kInvPhi * (hi - lo);
      fd = f(d);
    }
  }
  ScalarMinimum best{c, fc};
  if (fd < best.value) best = {d, fd};
  if (fa < best.value) best = {a, fa};
  if (fb < best.value) best = {b, fb};
  return best;
}

struct SimplexResult {
  Eigen::VectorXd x;
  double value;
  int evaluations;
};

/// Derivative-free Nelder-Mead minimization. Non-finite objective values are
/// treated as +infinity, so infeasible regions are simply avoided.
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& start, double initial_step, int max_iterations,
                          double value_tolerance = 1e-12);

}  // namespace maxent_hjb
