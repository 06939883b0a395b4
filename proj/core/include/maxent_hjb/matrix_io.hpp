#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>

namespace maxent_hjb {

/// Plain-text matrix: a first line `rows cols`, then whitespace-separated
/// entries in row-major order, written with 17 significant digits.
Eigen::MatrixXd read_matrix(std::istream& is, const std::string& source = "<stream>");
Eigen::MatrixXd read_matrix(const std::string& path);
void write_matrix(std::ostream& os, const Eigen::MatrixXd& M);
void write_matrix(const std::string& path, const Eigen::MatrixXd& M);

}  // namespace maxent_hjb
