#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "icsim/scenario.hpp"

namespace icsim {

namespace {

constexpr std::pair<Scenario, const char*> kScenarioNames[] = {
    {Scenario::g2_sweep, "g2-sweep"},       {Scenario::fringe, "fringe"}, {Scenario::visibility, "visibility"},
    {Scenario::duality_surface, "duality-surface"}, {Scenario::jitter, "jitter"},
    {Scenario::oracle_check, "oracle-check"}};

void reject_unknown_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double as_double(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError("'" + key + "' must be a number");
  }
}

template <typename T>
void read_number(const YAML::Node& node, const std::string& key, T& out) {
  if (node[key]) out = static_cast<T>(as_double(node[key], key));
}

std::vector<double> read_grid(const YAML::Node& node, const std::string& key) {
  std::vector<double> out;
  if (node.IsScalar()) {
    out.push_back(as_double(node, key));
  } else if (node.IsSequence()) {
    for (const auto& v : node) out.push_back(as_double(v, key));
  } else if (node.IsMap()) {
    reject_unknown_keys(node, {"start", "stop", "count", "step"}, "grid '" + key + "'");
    if (!node["start"] || !node["stop"]) throw ConfigError("grid '" + key + "' needs start and stop");
    const double start = as_double(node["start"], key), stop = as_double(node["stop"], key);
    if (node["count"] && node["step"]) throw ConfigError("grid '" + key + "': give count or step, not both");
    if (node["count"]) {
      const double count = as_double(node["count"], key);
      if (count < 1 || count != std::floor(count)) throw ConfigError("grid '" + key + "': count must be a positive integer");
      const auto n = static_cast<long>(count);
      for (long k = 0; k < n; ++k) out.push_back(n == 1 ? start : start + (stop - start) * double(k) / double(n - 1));
    } else if (node["step"]) {
      const double step = as_double(node["step"], key);
      if (!(step > 0.0)) throw ConfigError("grid '" + key + "': step must be positive");
      const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
      for (long k = 0; k <= n; ++k) out.push_back(start + step * double(k));
    } else {
      throw ConfigError("grid '" + key + "' needs count or step");
    }
  } else {
    throw ConfigError("grid '" + key + "' is empty");
  }
  if (out.empty()) throw ConfigError("grid '" + key + "' is empty");
  for (double v : out)
    if (!std::isfinite(v)) throw ConfigError("grid '" + key + "' has a non-finite value");
  return out;
}

DetectorBlock read_detector(const YAML::Node& node) {
  if (!node.IsMap()) throw ConfigError("'detector' must be a block");
  reject_unknown_keys(node,
                      {"jitter", "jitter_convention", "shape", "tau_c", "reference_peak", "reference_measured",
                       "bin_width", "window", "pair_rate", "accidental_rate", "duration"},
                      "detector");
  DetectorBlock d;
  read_number(node, "jitter", d.jitter);
  read_number(node, "reference_peak", d.reference_peak);
  read_number(node, "reference_measured", d.reference_measured);
  read_number(node, "bin_width", d.bin_width);
  read_number(node, "window", d.window);
  read_number(node, "pair_rate", d.pair_rate);
  read_number(node, "accidental_rate", d.accidental_rate);
  read_number(node, "duration", d.duration);
  if (node["tau_c"]) d.tau_c = as_double(node["tau_c"], "tau_c");
  try {
    if (node["jitter_convention"]) d.convention = jitter_convention_from_string(node["jitter_convention"].as<std::string>());
    if (node["shape"]) d.shape = line_shape_from_string(node["shape"].as<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(d.jitter >= 0.0)) throw ConfigError("detector.jitter must be non-negative");
  if (d.tau_c && !(*d.tau_c > 0.0)) throw ConfigError("detector.tau_c must be positive");
  if (!(d.bin_width > 0.0) || !(d.window > 0.0)) throw ConfigError("detector.bin_width and detector.window must be positive");
  if (!(d.pair_rate >= 0.0) || !(d.accidental_rate >= 0.0) || !(d.duration > 0.0))
    throw ConfigError("detector rates must be non-negative and duration positive");
  return d;
}

}  // namespace

std::string_view to_string(Scenario scenario) {
  for (const auto& [s, name] : kScenarioNames)
    if (s == scenario) return name;
  return "unknown";
}

Scenario scenario_from_string(std::string_view name) {
  for (const auto& [s, label] : kScenarioNames)
    if (name == label) return s;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

OutputFormat output_format_from_string(std::string_view name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw ConfigError("unknown output format '" + std::string(name) + "'");
}

DetectorSpec DetectorBlock::spec() const {
  return {per_detector_sigma(jitter, convention), bin_width, window};
}

double DetectorBlock::coherence_time() const {
  if (tau_c) return *tau_c;
  if (!(reference_peak > 1.0) || !(reference_measured > 1.0) || !(reference_measured < reference_peak))
    throw ConfigError("detector: need 1 < reference_measured < reference_peak to fit tau_c");
  try {
    return fit_coherence_time((reference_measured - 1.0) / (reference_peak - 1.0), spec(), shape);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("detector: ") + e.what());
  }
}

nlohmann::ordered_json ScenarioConfig::echo() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario ? nlohmann::ordered_json(std::string(to_string(*scenario))) : nlohmann::ordered_json();
  j["seed"] = seed;
  j["dim"] = dim ? nlohmann::ordered_json(*dim) : nlohmann::ordered_json();
  j["format"] = format == OutputFormat::csv ? "csv" : "json";
  j["gamma"] = gamma;
  j["r"] = r;
  j["coupling_sq"] = coupling_sq;
  j["background_offset"] = background_offset ? nlohmann::ordered_json(*background_offset) : nlohmann::ordered_json();
  j["phase_per_length"] = phase_per_length ? nlohmann::ordered_json(*phase_per_length) : nlohmann::ordered_json();
  j["grids"] = {{"alpha_sq", alpha_sq}, {"T", T}, {"phi", phi}, {"dx", dx}};
  if (detector) {
    const auto& d = *detector;
    j["detector"] = {{"jitter", d.jitter},
                     {"jitter_convention", std::string(to_string(d.convention))},
                     {"shape", std::string(to_string(d.shape))},
                     {"tau_c", d.tau_c ? nlohmann::ordered_json(*d.tau_c) : nlohmann::ordered_json()},
                     {"reference_peak", d.reference_peak},
                     {"reference_measured", d.reference_measured},
                     {"bin_width", d.bin_width},
                     {"window", d.window},
                     {"pair_rate", d.pair_rate},
                     {"accidental_rate", d.accidental_rate},
                     {"duration", d.duration}};
  } else {
    j["detector"] = nullptr;
  }
  j["tolerances"] = {{"density", tol_density}, {"nonperturbative", tol_nonperturbative}};
  return j;
}

ScenarioConfig parse_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  ScenarioConfig cfg;
  if (root.IsNull()) return cfg;
  if (!root.IsMap()) throw ConfigError("config must be a key/value block");
  reject_unknown_keys(root,
                      {"scenario", "seed", "dim", "format", "gamma", "r", "coupling_sq", "background_offset",
                       "phase_per_length", "grids", "detector", "tolerances"},
                      "config");
  if (root["scenario"]) cfg.scenario = scenario_from_string(root["scenario"].as<std::string>());
  if (root["format"]) cfg.format = output_format_from_string(root["format"].as<std::string>());
  if (root["seed"]) {
    try {
      cfg.seed = root["seed"].as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      throw ConfigError("'seed' must be a non-negative integer");
    }
  }
  if (root["dim"]) {
    const double d = as_double(root["dim"], "dim");
    if (d < 2 || d != std::floor(d)) throw ConfigError("'dim' must be an integer >= 2");
    cfg.dim = static_cast<Index>(d);
  }
  read_number(root, "gamma", cfg.gamma);
  read_number(root, "r", cfg.r);
  read_number(root, "coupling_sq", cfg.coupling_sq);
  if (root["background_offset"]) cfg.background_offset = as_double(root["background_offset"], "background_offset");
  if (root["phase_per_length"]) cfg.phase_per_length = as_double(root["phase_per_length"], "phase_per_length");

  if (const auto grids = root["grids"]) {
    if (!grids.IsMap()) throw ConfigError("'grids' must be a block");
    reject_unknown_keys(grids, {"alpha_sq", "T", "phi", "dx"}, "grids");
    if (grids["alpha_sq"]) cfg.alpha_sq = read_grid(grids["alpha_sq"], "alpha_sq");
    if (grids["T"]) cfg.T = read_grid(grids["T"], "T");
    if (grids["phi"]) cfg.phi = read_grid(grids["phi"], "phi");
    if (grids["dx"]) cfg.dx = read_grid(grids["dx"], "dx");
  }
  if (root["detector"]) cfg.detector = read_detector(root["detector"]);
  if (const auto tol = root["tolerances"]) {
    if (!tol.IsMap()) throw ConfigError("'tolerances' must be a block");
    reject_unknown_keys(tol, {"density", "nonperturbative"}, "tolerances");
    read_number(tol, "density", cfg.tol_density);
    read_number(tol, "nonperturbative", cfg.tol_nonperturbative);
  }

  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw ConfigError("'gamma' must lie in [0, 1]");
  if (!(cfg.coupling_sq >= 0.0)) throw ConfigError("'coupling_sq' must be non-negative");
  if (!(cfg.r >= 0.0)) throw ConfigError("'r' must be non-negative");
  for (double a : cfg.alpha_sq)
    if (!(a >= 0.0)) throw ConfigError("grids.alpha_sq must be non-negative");
  for (double t : cfg.T)
    if (!(std::abs(t) <= 1.0)) throw ConfigError("grids.T entries must satisfy |T| <= 1");
  if (!cfg.dx.empty() && !cfg.phase_per_length) throw ConfigError("grids.dx requires phase_per_length");
  if (!cfg.dx.empty() && !cfg.phi.empty()) throw ConfigError("give either grids.phi or grids.dx, not both");
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace icsim
