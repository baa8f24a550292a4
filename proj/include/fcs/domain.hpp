#pragma once

// Core data model for the fast-charging station controller.
//
// Units: power in kW, energy in kWh, scenario clock in seconds. Durations are
// converted to hours wherever energy is integrated (T = 60 s -> 1/60 h).

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcs {

inline constexpr double kSecondsPerHour = 3600.0;

inline double seconds_to_hours(double s) { return s / kSecondsPerHour; }

/// A vehicle plugged into the station.
struct ChargingSession {
  std::string id;
  double t_arr_s = 0.0;   // arrival on the scenario clock
  double x_kwh = 0.0;     // battery state of charge
  double x_max_kwh = 0.0; // battery capacity
  double p_min_kw = 0.0;  // minimum charging power
  double p_max_kw = 0.0;  // plug nominal level
};

struct StationConfig {
  double p_cs_max_kw = 0.0;
  std::vector<double> plugs_kw;

  std::size_t n_plugs() const { return plugs_kw.size(); }
};

struct StorageConfig {
  double y_max_kwh = 0.0;
  double p_s_max_kw = 0.0;
  double eps_s = 0.0;
  double y_ref_kwh = 0.0;
};

struct StorageState {
  double y_kwh = 0.0;
};

/// Raw PV output sampled on the scenario clock, held constant between
/// samples.
struct PvProfile {
  struct Sample {
    double t_s;
    double raw_kw;
  };
  std::vector<Sample> samples; // strictly increasing t_s
  double eps_pv = 0.0;
  double nominal_kw = 0.0;

  double t_begin() const { return samples.empty() ? 0.0 : samples.front().t_s; }
  double t_end() const { return samples.empty() ? 0.0 : samples.back().t_s; }
};

struct ControllerWeights {
  double alpha = 0.0; // storage tracking
  double beta = 0.0;  // charging tracking
  double gamma = 0.0; // grid power
  double delta = 0.0; // grid ramp
  double e = 0.0;     // priority exponent
  double sampling_s = 60.0;

  double sampling_h() const { return seconds_to_hours(sampling_s); }
};

enum class ControlMode { GridConnected, Standalone };

const char *to_string(ControlMode mode);
std::optional<ControlMode> parse_mode(const std::string &text);

/// Modelling switches that deviate from the literal storage/charging model.
struct ModelFlags {
  bool physical_losses = false;        // (1+eps) on discharge, 1/(1+eps) on charge
  bool symmetric_storage_limit = true; // also bound the charging rate by p_s_max
  bool hard_lower_bound = false;       // p_min <= P as a hard bound instead of {0} u [p_min, ..]
};

struct SessionPower {
  std::string id;
  double p_raw_kw = 0.0; // clamped desired rate before the budget split
  double p_ref_kw = 0.0; // allocated reference
  double p_kw = 0.0;     // delivered
};

/// Output of one control iteration.
struct ControlDecision {
  std::vector<SessionPower> sessions; // same order as the input sessions
  double p_s_kw = 0.0;                // storage, positive = discharging
  double p_g_kw = 0.0;                // grid import
  double p_pv_kw = 0.0;               // PV power actually injected (after curtailment)
  double y_next_kwh = 0.0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  bool fallback = false; // no feasible dispatch; all sessions off

  double total_charging_kw() const;
  double total_reference_kw() const;
};

/// Effective PV power at time `t_s`: raw sample (step-hold) times (1 - eps_pv).
/// Throws std::out_of_range outside [t_begin, t_end].
double effective_pv(const PvProfile &profile, double t_s);

/// Throws std::invalid_argument naming the first violated invariant.
void check_invariants(const ChargingSession &s);
void check_invariants(const StorageConfig &c);
void check_invariants(const StorageConfig &c, const StorageState &s);

} // namespace fcs
