#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "icsim/closed_form.hpp"
#include "icsim/interferometer.hpp"
#include "icsim/scenario.hpp"

namespace icsim {

namespace {

// Coupling used for the first-order density column; the reduced idler density
// does not depend on it, it only has to keep the state in the perturbative regime.
constexpr double kOracleCoupling = 1e-4;

ResultTable make_table(Scenario scenario, const ScenarioConfig& cfg, std::vector<std::string> columns) {
  ResultTable t;
  t.columns = std::move(columns);
  t.metadata["version"] = kVersion;
  t.metadata["modules"] = {{"fock_core", kVersion},     {"closed_form", kVersion}, {"interferometer", kVersion},
                           {"detector_model", kVersion}, {"scenario_cli", kVersion}};
  t.metadata["scenario"] = std::string(to_string(scenario));
  t.metadata["config"] = cfg.echo();
  return t;
}

// Identity residual maxima of the closed-form metrics over the config grid.
void add_residuals(ResultTable& t, const ScenarioConfig& cfg) {
  double vk = 0, kpc = 0;
  for (double T : cfg.T)
    for (double a : cfg.alpha_sq) {
      const auto m = duality_metrics(T, a, 1.0);
      vk = std::max(vk, m.residual_VK);
      kpc = std::max(kpc, m.residual_KPC);
    }
  t.metadata["residual_VK_max"] = vk;
  t.metadata["residual_KPC_max"] = kpc;
}

void finish(ResultTable& t, const ScenarioConfig& cfg, double leakage = 0.0) {
  t.metadata["truncation_leakage_max"] = leakage;
  add_residuals(t, cfg);
}

const DetectorBlock& require_detector(const ScenarioConfig& cfg, std::string_view scenario) {
  if (!cfg.detector) throw ConfigError(std::string(scenario) + " needs a detector block");
  return *cfg.detector;
}

nlohmann::ordered_json detector_metadata(const DetectorBlock& d, double tau_c, const JitteredProfile& jp) {
  return {{"shape", std::string(to_string(d.shape))},
          {"jitter_convention", std::string(to_string(d.convention))},
          {"per_detector_sigma", d.spec().jitter_sigma},
          {"kernel_sigma", d.spec().kernel_sigma()},
          {"tau_c", tau_c},
          {"tau_c_fitted", !d.tau_c.has_value()},
          {"reduction", jp.reduction}};
}

std::vector<double> phase_grid(const ScenarioConfig& cfg) {
  if (!cfg.dx.empty()) {
    std::vector<double> out;
    for (double x : cfg.dx) out.push_back(*cfg.phase_per_length * x);
    return out;
  }
  if (!cfg.phi.empty()) return cfg.phi;
  std::vector<double> out(361);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = 2.0 * std::numbers::pi * double(k) / 360.0;
  return out;
}

}  // namespace

ResultTable run_g2_sweep(const ScenarioConfig& cfg) {
  const auto& d = require_detector(cfg, "g2-sweep");
  const double tau_c = d.coherence_time();
  const auto det = d.spec();
  auto t = make_table(Scenario::g2_sweep, cfg, {"alpha_sq", "g2_ideal", "g2_measured", "g2_reconstructed"});
  JitteredProfile jp;
  for (double a : cfg.alpha_sq) {
    const auto ideal = ideal_profile(a, tau_c, d.shape);
    jp = apply_jitter(ideal, det);
    const double measured = jp.peak();
    t.add_row({a, ideal.peak, measured, reconstruct_peak(measured, det, tau_c, d.shape)});
  }
  t.metadata["detector"] = detector_metadata(d, tau_c, jp);
  finish(t, cfg);
  return t;
}

ResultTable run_fringe(const ScenarioConfig& cfg) {
  if (cfg.T.size() != 1) throw ConfigError("fringe takes a single T value");
  const double T = cfg.T.front();
  const bool use_dx = !cfg.dx.empty();
  const auto phases = phase_grid(cfg);
  std::vector<std::string> cols{"alpha_sq"};
  if (use_dx) cols.push_back("dx");
  cols.insert(cols.end(), {"dphi", "rate"});
  if (cfg.background_offset) cols.push_back("rate_with_background");
  auto t = make_table(Scenario::fringe, cfg, cols);

  auto per_alpha = nlohmann::ordered_json::array();
  for (double a : cfg.alpha_sq) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t k = 0; k < phases.size(); ++k) {
      InterferometerParams p{T, cfg.gamma, a, cfg.coupling_sq, phases[k]};
      const double rate = counting_rate(p).total();
      lo = std::min(lo, rate);
      hi = std::max(hi, rate);
      std::vector<Cell> row{a};
      if (use_dx) row.emplace_back(cfg.dx[k]);
      row.emplace_back(phases[k]);
      row.emplace_back(rate);
      if (cfg.background_offset) row.emplace_back(rate + *cfg.background_offset);
      t.add_row(std::move(row));
    }
    // Extremes of the cosine fringe, independent of how finely it is sampled.
    InterferometerParams p0{T, cfg.gamma, a, cfg.coupling_sq, 0.0};
    InterferometerParams pi{T, cfg.gamma, a, cfg.coupling_sq, std::numbers::pi};
    const double max = counting_rate(p0).total(), min = counting_rate(pi).total();
    per_alpha.push_back({{"alpha_sq", a},
                         {"min", min},
                         {"max", max},
                         {"visibility", max + min > 0 ? (max - min) / (max + min) : 0.0},
                         {"sampled_min", lo},
                         {"sampled_max", hi}});
  }
  t.metadata["fringes"] = std::move(per_alpha);
  finish(t, cfg);
  return t;
}

ResultTable run_visibility(const ScenarioConfig& cfg) {
  auto t = make_table(Scenario::visibility, cfg, {"T", "alpha_sq", "V"});
  for (double T : cfg.T)
    for (double a : cfg.alpha_sq) t.add_row({T, a, visibility(T, a, cfg.gamma)});
  finish(t, cfg);
  return t;
}

ResultTable run_duality_surface(const ScenarioConfig& cfg) {
  auto t = make_table(Scenario::duality_surface, cfg,
                      {"T", "alpha_sq", "V", "K", "P", "C", "residual_VK", "residual_KPC"});
  for (double T : cfg.T)
    for (double a : cfg.alpha_sq) {
      const auto m = duality_metrics(T, a, 1.0);
      t.add_row({T, a, m.V, m.K, m.P, m.C, m.residual_VK, m.residual_KPC});
    }
  finish(t, cfg);
  return t;
}

ResultTable run_jitter(const ScenarioConfig& cfg) {
  const auto& d = require_detector(cfg, "jitter");
  if (cfg.alpha_sq.size() != 1) throw ConfigError("jitter takes a single alpha_sq value");
  const double tau_c = d.coherence_time();
  const auto det = d.spec();
  const auto ideal = ideal_profile(cfg.alpha_sq.front(), tau_c, d.shape);
  const auto jp = apply_jitter(ideal, det);
  auto t = make_table(Scenario::jitter, cfg, {"tau_s", "g2", "counts"});
  G2Curve curve;
  try {
    curve = simulate_coincidences(ideal, det, d.pair_rate, d.accidental_rate, d.duration, cfg.seed);
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("jitter: ") + e.what());
  }
  for (std::size_t k = 0; k < curve.taus.size(); ++k)
    t.add_row({curve.taus[k], curve.values[k], static_cast<double>(curve.counts[k])});
  t.metadata["detector"] = detector_metadata(d, tau_c, jp);
  t.metadata["g2_ideal"] = ideal.peak;
  t.metadata["g2_jittered"] = jp.peak();
  t.metadata["g2_fitted"] = fit_peak(curve, ideal, det);
  t.metadata["total_pairs"] = curve.total_pairs;
  t.metadata["total_accidentals"] = curve.total_accidentals;
  t.metadata["background_per_bin"] = curve.background_per_bin;
  t.metadata["seed"] = cfg.seed;
  t.metadata["warnings"] = curve.warnings;
  finish(t, cfg);
  return t;
}

OracleCheck run_oracle_check(const ScenarioConfig& cfg) {
  auto t = make_table(Scenario::oracle_check, cfg,
                      {"T", "alpha_sq", "metric", "closed_form_value", "density_matrix_value",
                       "nonperturbative_value", "abs_diff"});
  OracleCheck out;
  double leakage = 0, max_density = 0, max_chain = 0;
  std::vector<std::string> warnings;
  const std::complex<double> c{kOracleCoupling, 0.0};
  for (double T : cfg.T)
    for (double a : cfg.alpha_sq) {
      const std::complex<double> alpha{std::sqrt(a), 0.0};
      const auto closed = duality_metrics(T, a, 1.0);
      const auto pert = build_perturbative_state({0, alpha, c}, {0, alpha, c}, T, alpha);
      const auto dens = metrics_from_density(idler_reduced_density(pert));
      const auto chain = [&] {
        try {
          return nonperturbative_chain({cfg.r, alpha, {}}, {cfg.r, alpha, {}}, T, alpha, 0.0, cfg.dim);
        } catch (const TruncationError& e) {
          throw ConfigError(std::string("oracle-check: ") + e.what());
        }
      }();
      const auto np = metrics_from_density(idler_reduced_density(chain.joint));
      leakage = std::max({leakage, pert.state.leakage(), chain.joint.state.leakage()});
      for (const auto& w : chain.joint.state.warnings())
        if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);

      const std::pair<const char*, std::array<double, 3>> rows[] = {{"V", {closed.V, dens.V, np.V}},
                                                                     {"K", {closed.K, dens.K, np.K}},
                                                                     {"P", {closed.P, dens.P, np.P}},
                                                                     {"C", {closed.C, dens.C, np.C}}};
      for (const auto& [name, v] : rows) {
        const double d_density = std::abs(v[0] - v[1]), d_chain = std::abs(v[0] - v[2]);
        max_density = std::max(max_density, d_density);
        max_chain = std::max(max_chain, d_chain);
        if (d_density > cfg.tol_density || d_chain > cfg.tol_nonperturbative) out.violations.push_back(t.rows.size());
        t.add_row({T, a, std::string(name), v[0], v[1], v[2], std::max(d_density, d_chain)});
      }
    }
  t.metadata["max_abs_diff_density"] = max_density;
  t.metadata["max_abs_diff_nonperturbative"] = max_chain;
  t.metadata["tolerances"] = {{"density", cfg.tol_density}, {"nonperturbative", cfg.tol_nonperturbative}};
  t.metadata["violations"] = out.violations.size();
  t.metadata["warnings"] = warnings;
  finish(t, cfg, leakage);
  out.table = std::move(t);
  return out;
}

RunOutcome run_scenario(Scenario scenario, const ScenarioConfig& cfg) {
  if (cfg.scenario && *cfg.scenario != scenario)
    throw ConfigError("config is for scenario '" + std::string(to_string(*cfg.scenario)) + "', not '" +
                      std::string(to_string(scenario)) + "'");
  try {
    switch (scenario) {
      case Scenario::g2_sweep: return {run_g2_sweep(cfg), 0};
      case Scenario::fringe: return {run_fringe(cfg), 0};
      case Scenario::visibility: return {run_visibility(cfg), 0};
      case Scenario::duality_surface: return {run_duality_surface(cfg), 0};
      case Scenario::jitter: return {run_jitter(cfg), 0};
      case Scenario::oracle_check: {
        auto check = run_oracle_check(cfg);
        const int code = check.violations.empty() ? 0 : 3;
        return {std::move(check.table), code};
      }
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown scenario");
}

}  // namespace icsim
