#pragma once

// Scenario configs and runners that turn the models into plot-ready tables.
//
// Config grammar (YAML):
//
//   scenario: fringe                 # optional; must match the CLI scenario
//   seed: 7
//   dim: 12                          # Fock cutoff for the nonperturbative oracle
//   format: csv                      # csv | json
//   gamma: 0.48
//   r: 0.05
//   coupling_sq: 1.0
//   background_offset: 4000          # fringe only, additive counts
//   phase_per_length: 12566.37       # rad per unit length, enables grids.dx
//   grids:
//     alpha_sq: [0, 1, 4, 9]         # list, scalar, or {start, stop, count|step}
//     T: 1.0
//     phi: {start: 0, stop: 6.283185307179586, count: 361}
//     dx: {start: 0, stop: 1.0e-3, count: 201}
//   detector:
//     jitter: 0.4e-9                 # quoted timing jitter (s)
//     jitter_convention: combined_std  # combined_std | combined_fwhm | per_detector_std | per_detector_fwhm
//     shape: gaussian                # gaussian | exponential
//     tau_c: 0.5e-9                  # omit to fit it to reference_peak -> reference_measured
//     reference_peak: 2.0
//     reference_measured: 1.75
//     bin_width: 2.0e-11
//     window: 3.0e-9
//     pair_rate: 1.0e5               # jitter scenario
//     accidental_rate: 0
//     duration: 10
//   tolerances:                      # oracle-check
//     density: 1.0e-10
//     nonperturbative: 5.0e-3

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "icsim/detector_model.hpp"
#include "icsim/result_table.hpp"
#include "icsim/types.hpp"

namespace icsim {

inline constexpr const char* kVersion = "1.0.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario { g2_sweep, fringe, visibility, duality_surface, jitter, oracle_check };
enum class OutputFormat { csv, json };

std::string_view to_string(Scenario scenario);
Scenario scenario_from_string(std::string_view name);
OutputFormat output_format_from_string(std::string_view name);

struct DetectorBlock {
  double jitter = 0.4e-9;
  JitterConvention convention = JitterConvention::combined_std;
  LineShape shape = LineShape::gaussian;
  std::optional<double> tau_c;
  double reference_peak = 2.0;
  double reference_measured = 1.75;
  double bin_width = 2.0e-11;
  double window = 3.0e-9;
  double pair_rate = 1.0e5;
  double accidental_rate = 0.0;
  double duration = 10.0;

  DetectorSpec spec() const;
  // Configured tau_c, or the one that maps reference_peak onto reference_measured.
  double coherence_time() const;
};

struct ScenarioConfig {
  std::optional<Scenario> scenario;
  std::vector<double> alpha_sq{0.0};
  std::vector<double> T{1.0};
  std::vector<double> phi;
  std::vector<double> dx;
  double gamma = 1.0;
  double r = 0.05;
  double coupling_sq = 1.0;
  std::optional<double> background_offset;
  std::optional<double> phase_per_length;
  std::optional<DetectorBlock> detector;
  OutputFormat format = OutputFormat::csv;
  std::uint64_t seed = 0;
  std::optional<Index> dim;
  double tol_density = 1e-10;
  double tol_nonperturbative = 5e-3;

  nlohmann::ordered_json echo() const;
};

ScenarioConfig parse_config(std::string_view yaml_text);
ScenarioConfig load_config(const std::filesystem::path& path);

ResultTable run_g2_sweep(const ScenarioConfig& cfg);
ResultTable run_fringe(const ScenarioConfig& cfg);
ResultTable run_visibility(const ScenarioConfig& cfg);
ResultTable run_duality_surface(const ScenarioConfig& cfg);
ResultTable run_jitter(const ScenarioConfig& cfg);

struct OracleCheck {
  ResultTable table;
  std::vector<std::size_t> violations;  // row indices outside tolerance
};

OracleCheck run_oracle_check(const ScenarioConfig& cfg);

struct RunOutcome {
  ResultTable table;
  int exit_code = 0;  // 0 ok, 3 tolerance violation
};

RunOutcome run_scenario(Scenario scenario, const ScenarioConfig& cfg);

}  // namespace icsim
