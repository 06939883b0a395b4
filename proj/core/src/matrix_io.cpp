#include "maxent_hjb/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "maxent_hjb/errors.hpp"

namespace maxent_hjb {

Eigen::MatrixXd read_matrix(std::istream& is, const std::string& source) {
  std::string header;
  if (!std::getline(is, header)) throw FormatError(source + ": missing `rows cols` header");
  std::istringstream hs(header);
  long rows = -1, cols = -1;
  std::string extra;
  if (!(hs >> rows >> cols) || (hs >> extra) || rows < 0 || cols < 0)
    throw FormatError(source + ": header must be two non-negative integers");
  Eigen::MatrixXd M(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      if (!(is >> M(i, j)))
        throw FormatError(source + ": expected " + std::to_string(rows * cols) + " entries");
    }
  }
  if (is >> extra) throw FormatError(source + ": trailing data after the last entry");
  return M;
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return read_matrix(is, path);
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& M) {
  os << M.rows() << ' ' << M.cols() << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", M(i, j));
      os << (j ? " " : "") << buf;
    }
    os << '\n';
  }
}

void write_matrix(const std::string& path, const Eigen::MatrixXd& M) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_matrix(os, M);
}

}  // namespace maxent_hjb
