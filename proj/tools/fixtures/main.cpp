// Regenerates the LQ fixtures: random stable (A, B) with Q = 0.02 I, R = 2 I.
//   maxent-hjb-fixtures [--out DIR]
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "maxent_hjb/matrix_io.hpp"
#include "maxent_hjb/models.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Write the LQ fixture matrices"};
  std::string out = "fixtures";
  app.add_option("--out", out, "Fixture root directory");
  CLI11_PARSE(app, argc, argv);

  struct Spec {
    int n, m;
    unsigned seed;
  };
  for (const Spec s : {Spec{3, 2, 3}, Spec{10, 10, 10}}) {
    const auto sys = maxent_hjb::models::random_stable_system(s.n, s.m, s.seed);
    const fs::path dir = fs::path(out) / ("lq_n" + std::to_string(s.n) + "_m" + std::to_string(s.m));
    fs::create_directories(dir);
    maxent_hjb::write_matrix((dir / "A.txt").string(), sys.A);
    maxent_hjb::write_matrix((dir / "B.txt").string(), sys.B);
    maxent_hjb::write_matrix((dir / "Q.txt").string(), 0.02 * Eigen::MatrixXd::Identity(s.n, s.n));
    maxent_hjb::write_matrix((dir / "R.txt").string(), 2.0 * Eigen::MatrixXd::Identity(s.m, s.m));
    std::printf("%s\n", dir.string().c_str());
  }
  return 0;
}
