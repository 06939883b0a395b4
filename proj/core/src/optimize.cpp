#include "maxent_hjb/optimize.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

namespace maxent_hjb {

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& start, double initial_step, int max_iterations,
                          double value_tolerance) {
  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  const Eigen::Index n = start.size();
  int evaluations = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), start);
  std::vector<double> values(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) simplex[static_cast<std::size_t>(i + 1)][i] += initial_step;
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Eigen::VectorXd> s2;
    std::vector<double> v2;
    for (auto i : order) {
      s2.push_back(simplex[i]);
      v2.push_back(values[i]);
    }
    simplex.swap(s2);
    values.swap(v2);
  };

  for (int iter = 0; iter < max_iterations; ++iter) {
    sort_simplex();
    const double spread = values.back() - values.front();
    if (std::isfinite(spread) && spread <= value_tolerance * (1.0 + std::abs(values.front()))) {
      double diameter = 0.0;
      for (const auto& v : simplex) diameter = std::max(diameter, (v - simplex.front()).norm());
      if (diameter <= 1e-9 * (1.0 + simplex.front().norm())) break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) centroid += simplex[static_cast<std::size_t>(i)];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd& worst = simplex.back();
    const Eigen::VectorXd reflected = centroid + kReflect * (centroid - worst);
    const double fr = eval(reflected);
    if (fr < values.front()) {
      const Eigen::VectorXd expanded = centroid + kExpand * (reflected - centroid);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex.back() = expanded;
        values.back() = fe;
      } else {
        simplex.back() = reflected;
        values.back() = fr;
      }
      continue;
    }
    if (fr < values[values.size() - 2]) {
      simplex.back() = reflected;
      values.back() = fr;
      continue;
    }
    const bool outside = fr < values.back();
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + kContract * (reflected - centroid))
                : Eigen::VectorXd(centroid + kContract * (worst - centroid));
    const double fc = eval(contracted);
    if (fc < (outside ? fr : values.back())) {
      simplex.back() = contracted;
      values.back() = fc;
      continue;
    }
    for (std::size_t i = 1; i < simplex.size(); ++i) {
      simplex[i] = simplex.front() + kShrink * (simplex[i] - simplex.front());
      values[i] = eval(simplex[i]);
    }
  }
  sort_simplex();
  return {simplex.front(), values.front(), evaluations};
}

}  // namespace maxent_hjb
