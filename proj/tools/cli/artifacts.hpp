#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace maxent_hjb::cli {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;  ///< relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// Files written by one run. Paths are handed out through file(), so that a
/// failed run can remove exactly what it created.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }

  /// Registers `name` and returns its full path. Creates the directory on first use.
  std::filesystem::path file(const std::string& name);

  void write_json(const std::string& name, const nlohmann::ordered_json& doc);

  /// Hashes every registered file that exists.
  std::vector<ManifestEntry> entries() const;

  /// Deletes every registered file, and the directory if this run created it
  /// and it is now empty.
  void discard();

 private:
  std::filesystem::path dir_;
  bool created_dir_ = false;
  std::vector<std::string> names_;
};

/// True when every file listed in dir/manifest.json exists with the recorded
/// hash and size.
bool verify_manifest(const std::filesystem::path& dir, std::string* problem = nullptr);

}  // namespace maxent_hjb::cli
