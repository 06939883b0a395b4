// maxent-hjb <command> [--config FILE] [--seed N] [--out DIR] [--key value ...]
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"

namespace {

using namespace maxent_hjb::cli;

// Turns the leftover `--key value`, `--key=value` and bare `--flag` tokens
// into override pairs.
std::vector<std::pair<std::string, std::string>> overrides_from(const std::vector<std::string>& rest) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const std::string& tok = rest[i];
    if (tok.rfind("--", 0) != 0 || tok.size() == 2)
      throw ConfigError("unexpected argument '" + tok + "'; overrides look like --key value");
    const std::string body = tok.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else if (i + 1 < rest.size() && rest[i + 1].rfind("--", 0) != 0) {
      out.emplace_back(body, rest[++i]);
    } else {
      out.emplace_back(body, "true");
    }
  }
  return out;
}

void print_keys(const std::string& command) {
  std::printf("%s keys:\n", command.c_str());
  for (const auto& p : command_schema(command))
    std::printf("  --%-22s default %-28s %s\n", p.key.c_str(), p.default_value.c_str(), p.doc.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-regularized HJB experiments"};
  app.allow_extras();
  std::string command;
  std::string config_path;
  std::string seed;
  std::string out;
  bool list_keys = false;
  app.add_option("command", command, "Experiment to run")
      ->required()
      ->check(CLI::IsMember(command_names()));
  app.add_option("--config", config_path, "Key-value config file");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", out, "Output directory");
  app.add_flag("--list-keys", list_keys, "Print the command's keys and defaults, then exit");
  CLI11_PARSE(app, argc, argv);

  try {
    if (list_keys) {
      print_keys(command);
      return 0;
    }
    auto overrides = overrides_from(app.remaining());
    if (!seed.empty()) overrides.emplace_back("seed", seed);
    if (!out.empty()) overrides.emplace_back("out", out);
    const ExperimentConfig cfg = parse_config(
        command, config_path.empty() ? std::nullopt : std::optional<std::string>(config_path), overrides);
    const RunManifest m = run(cfg);
    std::printf("%s: wrote %zu files to %s in %.2f s\n", m.command.c_str(), m.files.size(),
                cfg.output_dir.c_str(), m.duration_seconds);
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
