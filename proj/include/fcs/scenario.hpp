#pragma once

// Scenario description, its file format and validation.
//
// Scenario files are JSON documents (conventionally `*.cfg`). Unknown keys
// are rejected; every problem found is reported, not just the first. See
// README.md for the schema.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fcs/domain.hpp"

namespace fcs {

struct FleetEvent {
  std::string id;
  double t_arr_s = 0.0;
  double plug_kw = 0.0; // plug level the vehicle connects to; becomes p_max
  double x0_kwh = 0.0;
  double x_max_kwh = 0.0;
  double p_min_kw = 0.0;
  std::optional<double> t_depart_s; // leaves even if not full

  bool operator==(const FleetEvent &) const = default;
};

/// Bell-shaped raw PV curve sampled every sampling period over the horizon.
/// Labeled synthetic: it is a stand-in for a measured daily profile.
struct SyntheticPv {
  double peak_kw = 0.0;
  double center_s = 0.0;
  double width_s = 1.0;
  double noise = 0.0; // relative uniform noise amplitude, driven by the seed

  bool operator==(const SyntheticPv &) const = default;
};

/// Two-column CSV `t_s,raw_kw`; the path is stored resolved.
struct CsvPv {
  std::string path;
  std::vector<PvProfile::Sample> samples;

  bool operator==(const CsvPv &o) const;
};

struct PvConfig {
  double nominal_kw = 0.0;
  double eps_pv = 0.0;
  std::variant<SyntheticPv, CsvPv> source;

  bool operator==(const PvConfig &) const = default;
};

struct ScenarioConfig {
  std::string name;
  StationConfig station;
  StorageConfig storage;
  double y0_kwh = 0.0;
  PvConfig pv;
  std::vector<FleetEvent> fleet;
  ControllerWeights weights;
  ControlMode mode = ControlMode::Standalone;
  double horizon_s = 0.0;
  ModelFlags flags;
  std::uint64_t seed = 0;

  std::size_t steps() const; // horizon / T + 1
};

bool operator==(const StationConfig &a, const StationConfig &b);
bool operator==(const StorageConfig &a, const StorageConfig &b);
bool operator==(const ControllerWeights &a, const ControllerWeights &b);
bool operator==(const ModelFlags &a, const ModelFlags &b);
bool operator==(const ScenarioConfig &a, const ScenarioConfig &b);

/// All validation failures of a scenario.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string> &errors() const { return errors_; }

private:
  std::vector<std::string> errors_;
};

/// Empty when the scenario is valid.
std::vector<std::string> validate(const ScenarioConfig &cfg);

/// Parse and validate. `base_dir` resolves relative PV CSV paths.
/// Throws ConfigError.
ScenarioConfig parse_scenario(const std::string &text, const std::filesystem::path &base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path &path);

std::string dump_scenario(const ScenarioConfig &cfg);
void save_scenario(const ScenarioConfig &cfg, const std::filesystem::path &path);

/// Reads a `t_s,raw_kw` CSV; an optional non-numeric header line is skipped.
std::vector<PvProfile::Sample> read_pv_csv(const std::filesystem::path &path);

/// Sampled PV profile for the scenario's horizon.
PvProfile build_pv_profile(const ScenarioConfig &cfg);

/// Named numeric override (alpha, beta, gamma, delta, e, y0). Returns false
/// for an unknown name.
bool set_parameter(ScenarioConfig &cfg, const std::string &name, double value);

/// The reference service area: 120 kW station with 50/50/43/22 kW plugs,
/// 300 kWh / 150 kW storage, 120 kW PV, T = 60 s over 120 minutes.
ScenarioConfig canonical_scenario();

} // namespace fcs
