#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace maxent_hjb::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ParamType { Real, Integer, Text, Flag, RealList };

struct ParamSpec {
  std::string key;
  ParamType type;
  std::string default_value;
  std::string doc;
  /// Returns an error message when the parsed value is out of range.
  std::function<std::string(const std::string&)> check;
};

/// Every command name accepted by the runner.
const std::vector<std::string>& command_names();

/// Keys accepted by `command` (seed and out included), in documentation order.
const std::vector<ParamSpec>& command_schema(const std::string& command);

struct ExperimentConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::string output_dir;
  /// Canonical text of every key of the command's schema.
  std::map<std::string, std::string> values;

  double real(const std::string& key) const;
  long integer(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
};

/// Builds a config from defaults, then the file (if any), then overrides.
/// The file is flat `key = value` text; `#` starts a comment. Keys before
/// any section may only be `seed` and `out`; a `[command]` section holds
/// that command's keys. Sections of other commands are validated and
/// skipped. Override keys may use dashes in place of underscores.
ExperimentConfig parse_config(const std::string& command,
                              const std::optional<std::string>& config_path,
                              const std::vector<std::pair<std::string, std::string>>& overrides);

/// Same, reading the file contents from a string (`source` names it in errors).
ExperimentConfig parse_config_text(const std::string& command, const std::string& text,
                                   const std::string& source,
                                   const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace maxent_hjb::cli
