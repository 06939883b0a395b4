#include "maxent_hjb/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "maxent_hjb/errors.hpp"

namespace maxent_hjb {

void gauss_legendre_rule(int n, Vector& nodes, Vector& weights) {
  if (n < 1) throw InvalidArgument("gauss_legendre_rule: n must be >= 1");
  nodes.resize(n);
  weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute derivative at the converged root.
    double p0 = 1.0;
    double p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    nodes[i] = -z;
    nodes[n - 1 - i] = z;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

QuadratureGrid::QuadratureGrid(ControlBox box, Rule rule, int nodes_per_dim,
                               const std::vector<Vector>& axis_nodes,
                               const std::vector<Vector>& axis_weights)
    : box_(std::move(box)), rule_(rule), nodes_per_dim_(nodes_per_dim), axis_nodes_(axis_nodes) {
  const int m = box_.dim();
  Eigen::Index total = 1;
  for (int d = 0; d < m; ++d) total *= axis_nodes[d].size();
  nodes_.resize(m, total);
  weights_.resize(total);
  std::vector<Eigen::Index> idx(m, 0);
  for (Eigen::Index j = 0; j < total; ++j) {
    double w = 1.0;
    for (int d = 0; d < m; ++d) {
      nodes_(d, j) = axis_nodes[d][idx[d]];
      w *= axis_weights[d][idx[d]];
    }
    weights_[j] = w;
    // First axis varies fastest.
    for (int d = 0; d < m; ++d) {
      if (++idx[d] < axis_nodes[d].size()) break;
      idx[d] = 0;
    }
  }
  log_weights_ = weights_.array().log();
}

QuadratureGrid QuadratureGrid::gauss_legendre(const ControlBox& box, int nodes_per_dim) {
  if (nodes_per_dim < 1) throw InvalidArgument("quadrature needs at least one node per dimension");
  Vector ref_nodes, ref_weights;
  gauss_legendre_rule(nodes_per_dim, ref_nodes, ref_weights);
  std::vector<Vector> axis_nodes, axis_weights;
  for (int d = 0; d < box.dim(); ++d) {
    const double c = 0.5 * (box.upper()[d] + box.lower()[d]);
    const double h = 0.5 * (box.upper()[d] - box.lower()[d]);
    axis_nodes.push_back((c + h * ref_nodes.array()).matrix());
    axis_weights.push_back(h * ref_weights);
  }
  return QuadratureGrid(box, Rule::GaussLegendre, nodes_per_dim, axis_nodes, axis_weights);
}

QuadratureGrid QuadratureGrid::trapezoid(const ControlBox& box, int nodes_per_dim) {
  if (nodes_per_dim < 2) throw InvalidArgument("trapezoid rule needs at least two nodes per dimension");
  std::vector<Vector> axis_nodes, axis_weights;
  for (int d = 0; d < box.dim(); ++d) {
    const double lo = box.lower()[d];
    const double hi = box.upper()[d];
    const double h = (hi - lo) / (nodes_per_dim - 1);
    Vector nodes(nodes_per_dim), weights(nodes_per_dim);
    for (int i = 0; i < nodes_per_dim; ++i) {
      nodes[i] = (i == nodes_per_dim - 1) ? hi : lo + i * h;
      weights[i] = h;
    }
    weights[0] *= 0.5;
    weights[nodes_per_dim - 1] *= 0.5;
    axis_nodes.push_back(nodes);
    axis_weights.push_back(weights);
  }
  return QuadratureGrid(box, Rule::Trapezoid, nodes_per_dim, axis_nodes, axis_weights);
}

QuadratureGrid QuadratureGrid::make_default(const ControlBox& box, int nodes_per_dim) {
  if (box.dim() <= 3) return gauss_legendre(box, nodes_per_dim);
  return trapezoid(box, nodes_per_dim);
}

QuadratureGrid QuadratureGrid::refined(int nodes_per_dim) const {
  return rule_ == Rule::GaussLegendre ? gauss_legendre(box_, nodes_per_dim)
                                      : trapezoid(box_, nodes_per_dim);
}

}  // namespace maxent_hjb
