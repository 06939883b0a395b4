#pragma once

#include <Eigen/Dense>

#include "maxent_hjb/dynamics.hpp"

namespace maxent_hjb {

/// Tensorized quadrature rule over a ControlBox. Immutable once built.
class QuadratureGrid {
 public:
  enum class Rule { GaussLegendre, Trapezoid };

  static constexpr int kDefaultNodesPerDim = 64;

  static QuadratureGrid gauss_legendre(const ControlBox& box,
                                       int nodes_per_dim = kDefaultNodesPerDim);
  static QuadratureGrid trapezoid(const ControlBox& box, int nodes_per_dim);
  /// Gauss-Legendre up to m = 3, trapezoid beyond.
  static QuadratureGrid make_default(const ControlBox& box,
                                     int nodes_per_dim = kDefaultNodesPerDim);

  const ControlBox& box() const { return box_; }
  Rule rule() const { return rule_; }
  int nodes_per_dim() const { return nodes_per_dim_; }
  int control_dim() const { return box_.dim(); }
  Eigen::Index size() const { return weights_.size(); }

  /// m x N matrix, one node per column.
  const Matrix& nodes() const { return nodes_; }
  const Vector& weights() const { return weights_; }
  const Vector& log_weights() const { return log_weights_; }
  /// One-dimensional node positions along control axis d (ascending).
  const Vector& axis_nodes(int d) const { return axis_nodes_[static_cast<std::size_t>(d)]; }

  /// Same rule and box with a different node count.
  QuadratureGrid refined(int nodes_per_dim) const;

 private:
  QuadratureGrid(ControlBox box, Rule rule, int nodes_per_dim,
                 const std::vector<Vector>& axis_nodes,
                 const std::vector<Vector>& axis_weights);

  ControlBox box_;
  Rule rule_;
  int nodes_per_dim_;
  Matrix nodes_;
  Vector weights_;
  Vector log_weights_;
  std::vector<Vector> axis_nodes_;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre_rule(int n, Vector& nodes, Vector& weights);

}  // namespace maxent_hjb
