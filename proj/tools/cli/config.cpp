#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#ifndef MAXENT_HJB_FIXTURE_DIR
#define MAXENT_HJB_FIXTURE_DIR "fixtures"
#endif

namespace maxent_hjb::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_real(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long> parse_integer(const std::string& s) {
  long v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end) return std::nullopt;
  return v;
}

std::optional<bool> parse_flag(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  return std::nullopt;
}

std::optional<std::vector<double>> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = parse_real(trim(item));
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

const char* type_name(ParamType t) {
  switch (t) {
    case ParamType::Real: return "a real number";
    case ParamType::Integer: return "an integer";
    case ParamType::Text: return "text";
    case ParamType::Flag: return "true or false";
    case ParamType::RealList: return "a comma-separated list of reals";
  }
  return "?";
}

// Canonical form of a raw value, or nullopt on a type mismatch.
std::optional<std::string> canonical(const ParamSpec& spec, const std::string& raw) {
  const std::string v = trim(raw);
  switch (spec.type) {
    case ParamType::Real:
      if (!parse_real(v)) return std::nullopt;
      return v;
    case ParamType::Integer:
      if (!parse_integer(v)) return std::nullopt;
      return v;
    case ParamType::Text:
      return v;
    case ParamType::Flag: {
      const auto f = parse_flag(v);
      if (!f) return std::nullopt;
      return std::string(*f ? "true" : "false");
    }
    case ParamType::RealList:
      if (!parse_list(v)) return std::nullopt;
      return v;
  }
  return std::nullopt;
}

using Check = std::function<std::string(const std::string&)>;

Check positive(const std::string& key) {
  return [key](const std::string& v) {
    return *parse_real(v) > 0.0 ? std::string() : key + " must be > 0";
  };
}
Check nonnegative(const std::string& key) {
  return [key](const std::string& v) {
    return *parse_real(v) >= 0.0 ? std::string() : key + " must be >= 0";
  };
}
Check at_least(const std::string& key, long lo) {
  return [key, lo](const std::string& v) {
    return *parse_integer(v) >= lo ? std::string() : key + " must be >= " + std::to_string(lo);
  };
}
Check one_of(const std::string& key, std::vector<std::string> options) {
  return [key, options](const std::string& v) {
    if (std::find(options.begin(), options.end(), v) != options.end()) return std::string();
    std::string msg = key + " must be one of:";
    for (const auto& o : options) msg += " " + o;
    return msg;
  };
}
Check all_positive(const std::string& key) {
  return [key](const std::string& v) {
    const auto list = parse_list(v);
    for (double a : *list)
      if (!(a > 0.0)) return key + " entries must be > 0";
    return std::string();
  };
}
Check cfl_range() {
  return [](const std::string& v) {
    const double c = *parse_real(v);
    return c > 0.0 && c <= 0.9 ? std::string() : std::string("cfl must lie in (0, 0.9]");
  };
}

std::vector<ParamSpec> common() {
  return {
      {"seed", ParamType::Integer, "0", "random seed", at_least("seed", 0)},
      {"out", ParamType::Text, "out", "output directory", nullptr},
  };
}

std::vector<ParamSpec> with_common(std::vector<ParamSpec> specific) {
  std::vector<ParamSpec> all = common();
  all.insert(all.end(), specific.begin(), specific.end());
  return all;
}

std::vector<ParamSpec> learner_keys(const std::string& eps_default) {
  const std::string fixture = std::string(MAXENT_HJB_FIXTURE_DIR) + "/lq_n3_m2";
  return with_common({
      {"fixture", ParamType::Text, fixture, "directory holding A.txt B.txt Q.txt R.txt", nullptr},
      {"alpha", ParamType::Real, "1", "temperature", positive("alpha")},
      {"lambda", ParamType::Real, "1e-10", "discount rate", nonnegative("lambda")},
      {"window", ParamType::Real, "0.01", "window length delta t", positive("window")},
      {"n_sub", ParamType::Integer, "10", "Euler substeps per window", at_least("n_sub", 2)},
      {"eps_stop", ParamType::Real, eps_default, "stop when ||P_k - P_k-1||_F is below this",
       positive("eps_stop")},
      {"max_iters", ParamType::Integer, "50", "iteration cap", at_least("max_iters", 1)},
      {"horizon", ParamType::Real, "500", "simulated time for cost and settling metrics",
       positive("horizon")},
      {"x0", ParamType::RealList, "10", "initial state (one value fills every entry)", nullptr},
      {"exploration", ParamType::Text, "gaussian", "gaussian or sinusoid",
       one_of("exploration", {"gaussian", "sinusoid"})},
      {"sinusoid_amplitude", ParamType::Real, "0.5", "baseline amplitude a", nonnegative("sinusoid_amplitude")},
      {"sinusoid_omega_bar", ParamType::Real, "100", "baseline frequency bound", positive("sinusoid_omega_bar")},
      {"sinusoid_terms", ParamType::Integer, "100", "baseline number of sines", at_least("sinusoid_terms", 1)},
      {"band", ParamType::Real, "1", "settling band", positive("band")},
      {"quadrature", ParamType::Text, "trapezoid", "window integral rule: left or trapezoid",
       one_of("quadrature", {"left", "trapezoid"})},
      {"rank_tol", ParamType::Real, "1e-8", "relative singular-value threshold", positive("rank_tol")},
      {"window_budget_factor", ParamType::Integer, "50", "windows per regression before giving up, per unknown",
       at_least("window_budget_factor", 1)},
      {"record_trajectory", ParamType::Flag, "false", "write trajectory.csv", nullptr},
  });
}

const std::map<std::string, std::vector<ParamSpec>>& schemas() {
  static const std::map<std::string, std::vector<ParamSpec>> table = [] {
    std::map<std::string, std::vector<ParamSpec>> t;
    t["ham-sweep"] = with_common({
        {"model", ParamType::Text, "integrator", "integrator (f = u, r = 0) or vdp",
         one_of("model", {"integrator", "vdp"})},
        {"alphas", ParamType::RealList, "2,1,0.5,0.1,0.05,0.01", "temperatures, decreasing",
         all_positive("alphas")},
        {"p_min", ParamType::Real, "-3", "first swept costate value", nullptr},
        {"p_max", ParamType::Real, "3", "last swept costate value", nullptr},
        {"p_points", ParamType::Integer, "13", "number of swept costate values", at_least("p_points", 1)},
        {"p1", ParamType::Real, "0.1", "vdp only: fixed first costate entry", nullptr},
        {"x", ParamType::RealList, "0.5,-0.5", "vdp only: state", nullptr},
        {"nodes", ParamType::Integer, "64", "Gauss-Legendre nodes", at_least("nodes", 2)},
    });
    t["hjb-compare"] = with_common({
        {"alpha", ParamType::Real, "1", "temperature", positive("alpha")},
        {"t", ParamType::Real, "0.1", "evaluation time", positive("t")},
        {"domain_min", ParamType::Real, "-2", "lower edge of the square domain", nullptr},
        {"domain_max", ParamType::Real, "2", "upper edge of the square domain", nullptr},
        {"nx", ParamType::Integer, "161", "grid nodes along x1", at_least("nx", 8)},
        {"ny", ParamType::Integer, "161", "grid nodes along x2", at_least("ny", 8)},
        {"nodes", ParamType::Integer, "16", "Gauss-Legendre nodes over U", at_least("nodes", 2)},
        {"cfl", ParamType::Real, "0.5", "Godunov CFL number", cfl_range()},
        {"formula", ParamType::Text, "min", "Hopf-Lax form: min or max", one_of("formula", {"min", "max"})},
        {"n_starts", ParamType::Integer, "16", "random simplex starts at cold nodes", at_least("n_starts", 1)},
        {"start_radius", ParamType::Real, "5", "radius of the start ball", positive("start_radius")},
        {"simplex_iters", ParamType::Integer, "200", "iterations per cold start", at_least("simplex_iters", 1)},
        {"warm_simplex_iters", ParamType::Integer, "30", "iterations per warm start", at_least("warm_simplex_iters", 1)},
        {"warm_simplex_step", ParamType::Real, "0.1", "simplex edge at warm starts", positive("warm_simplex_step")},
        {"surface_restarts", ParamType::Integer, "0", "random starts added at warm nodes", at_least("surface_restarts", 0)},
        {"ode_step", ParamType::Real, "0.025", "RK4 step bound", positive("ode_step")},
        {"margin", ParamType::Real, "0.1", "cropped fraction for the interior comparison", nonnegative("margin")},
    });
    t["vdp-control"] = with_common({
        {"alpha", ParamType::Real, "1", "temperature", positive("alpha")},
        {"total_T", ParamType::Real, "20", "closed-loop horizon", positive("total_T")},
        {"window_T", ParamType::Real, "2.5", "subproblem horizon", positive("window_T")},
        {"dt", ParamType::Real, "0.1", "sampling interval (Euler substep dt^2)", positive("dt")},
        {"control_interval", ParamType::Real, "0.1", "time between Hopf-Lax re-solves", positive("control_interval")},
        {"x0", ParamType::RealList, "0.05,0.25,0,0.02", "initial state", nullptr},
        {"nodes", ParamType::Integer, "16", "Gauss-Legendre nodes over U", at_least("nodes", 2)},
        {"n_starts", ParamType::Integer, "8", "random simplex starts", at_least("n_starts", 1)},
        {"start_radius", ParamType::Real, "2", "radius of the start ball", positive("start_radius")},
        {"simplex_iters", ParamType::Integer, "200", "iterations per start", at_least("simplex_iters", 1)},
        {"warm_simplex_iters", ParamType::Integer, "60", "iterations from the previous optimum", at_least("warm_simplex_iters", 1)},
        {"ode_step", ParamType::Real, "0.05", "RK4 step bound", positive("ode_step")},
        {"band", ParamType::Real, "0.1", "settling band on max |x_i|", positive("band")},
    });
    t["lq-onpolicy"] = learner_keys("0.5");
    t["lq-offpolicy"] = learner_keys("1e-3");
    t["lq-exact"] = with_common({
        {"fixture", ParamType::Text, std::string(MAXENT_HJB_FIXTURE_DIR) + "/lq_n3_m2",
         "directory holding A.txt B.txt Q.txt R.txt", nullptr},
        {"alpha", ParamType::Real, "1", "temperature", positive("alpha")},
        {"lambda", ParamType::Real, "1e-10", "discount rate", nonnegative("lambda")},
        {"tol", ParamType::Real, "1e-12", "Kleinman stopping threshold", positive("tol")},
    });
    return t;
  }();
  return table;
}

std::string valid_keys(const std::vector<ParamSpec>& schema) {
  std::string s;
  for (const auto& p : schema) s += (s.empty() ? "" : ", ") + p.key;
  return s;
}

const ParamSpec* find(const std::vector<ParamSpec>& schema, const std::string& key) {
  for (const auto& p : schema)
    if (p.key == key) return &p;
  return nullptr;
}

void assign(ExperimentConfig& cfg, const std::vector<ParamSpec>& schema, const std::string& key,
            const std::string& raw, const std::string& where) {
  const ParamSpec* spec = find(schema, key);
  if (!spec)
    throw ConfigError(where + ": unknown key '" + key + "' for " + cfg.command +
                      "; valid keys: " + valid_keys(schema));
  const auto v = canonical(*spec, raw);
  if (!v)
    throw ConfigError(where + ": '" + key + "' expects " + type_name(spec->type) + ", got '" +
                      trim(raw) + "'");
  cfg.values[key] = *v;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"ham-sweep",   "hjb-compare",  "vdp-control",
                                                 "lq-onpolicy", "lq-offpolicy", "lq-exact"};
  return names;
}

const std::vector<ParamSpec>& command_schema(const std::string& command) {
  const auto it = schemas().find(command);
  if (it == schemas().end()) {
    std::string msg = "unknown command '" + command + "'; commands:";
    for (const auto& c : command_names()) msg += " " + c;
    throw ConfigError(msg);
  }
  return it->second;
}

ExperimentConfig parse_config_text(const std::string& command, const std::string& text,
                                   const std::string& source,
                                   const std::vector<std::pair<std::string, std::string>>& overrides) {
  const auto& schema = command_schema(command);
  ExperimentConfig cfg;
  cfg.command = command;
  for (const auto& p : schema) cfg.values[p.key] = p.default_value;

  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + ": malformed section header '" + body + "'");
      section = trim(body.substr(1, body.size() - 2));
      command_schema(section);  // rejects unknown sections
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + body + "'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = body.substr(eq + 1);
    if (section.empty()) {
      if (key != "seed" && key != "out")
        throw ConfigError(where + ": only seed and out may appear before a [command] section");
      assign(cfg, schema, key, value, where);
    } else if (section == command) {
      assign(cfg, schema, key, value, where);
    } else {
      ExperimentConfig other;
      other.command = section;
      assign(other, command_schema(section), key, value, where);
    }
  }

  for (const auto& [raw_key, value] : overrides) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '-', '_');
    assign(cfg, schema, key, value, "--" + raw_key);
  }

  for (const auto& p : schema) {
    if (!p.check) continue;
    const std::string err = p.check(cfg.values[p.key]);
    if (!err.empty()) throw ConfigError(command + ": " + err);
  }
  cfg.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  cfg.output_dir = cfg.text("out");
  return cfg;
}

ExperimentConfig parse_config(const std::string& command,
                              const std::optional<std::string>& config_path,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::string text;
  std::string source = "<no file>";
  if (config_path) {
    std::ifstream is(*config_path);
    if (!is) throw ConfigError("cannot read config file " + *config_path);
    std::ostringstream ss;
    ss << is.rdbuf();
    text = ss.str();
    source = *config_path;
  }
  return parse_config_text(command, text, source, overrides);
}

double ExperimentConfig::real(const std::string& key) const {
  const auto v = parse_real(text(key));
  if (!v) throw ConfigError(key + " is not a real number");
  return *v;
}

long ExperimentConfig::integer(const std::string& key) const {
  const auto v = parse_integer(text(key));
  if (!v) throw ConfigError(key + " is not an integer");
  return *v;
}

const std::string& ExperimentConfig::text(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw ConfigError("no key '" + key + "' in the " + command + " config");
  return it->second;
}

bool ExperimentConfig::flag(const std::string& key) const {
  const auto v = parse_flag(text(key));
  if (!v) throw ConfigError(key + " is not a flag");
  return *v;
}

std::vector<double> ExperimentConfig::reals(const std::string& key) const {
  const auto v = parse_list(text(key));
  if (!v) throw ConfigError(key + " is not a list of reals");
  return *v;
}

}  // namespace maxent_hjb::cli
