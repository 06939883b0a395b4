#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "artifacts.hpp"
#include "config.hpp"

namespace maxent_hjb::cli {

/// A library error raised while running one stage of a command.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& command, const std::string& stage, const std::string& what);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct RunManifest {
  std::string command;
  std::string version;
  ExperimentConfig config;
  double duration_seconds = 0.0;
  std::vector<ManifestEntry> files;
};

std::string library_version();

/// Runs the configured experiment into config.output_dir and writes
/// manifest.json last. Outputs other than the manifest depend only on the
/// config. On failure every file written so far is removed and StageError
/// is thrown.
RunManifest run(const ExperimentConfig& config);

}  // namespace maxent_hjb::cli
