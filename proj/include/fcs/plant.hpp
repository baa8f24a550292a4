#pragma once

// Closed-loop simulation of the service area: vehicle arrivals and queueing,
// battery and storage dynamics, PV disturbance, one control iteration per
// sampling period.

#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcs/controller.hpp"
#include "fcs/scenario.hpp"

namespace fcs {

/// One per fleet event, in fleet order, on every log row.
struct SessionTrace {
  double raw_kw = 0.0; // clamped desired rate
  double ref_kw = 0.0;
  double p_kw = 0.0;
  double x_kwh = 0.0; // at the start of the step
  bool active = false;
};

struct StepLog {
  double t_s = 0.0;
  std::vector<SessionTrace> sessions;
  double ref_total_kw = 0.0;
  double p_total_kw = 0.0;
  double p_pv_kw = 0.0;
  double p_s_kw = 0.0;
  double p_g_kw = 0.0;
  double y_kwh = 0.0; // at the start of the step
  double kkt_residual = 0.0;
  bool fallback = false;
};

struct SessionSummary {
  std::string id;
  double t_arr_s = 0.0;
  double plug_kw = 0.0;
  std::optional<double> t_connect_s;
  std::optional<double> t_complete_s;
  std::optional<double> t_leave_s; // departed before completion
  double energy_kwh = 0.0;
};

struct RunResult {
  std::vector<std::string> session_ids; // fleet order
  std::vector<StepLog> logs;
  std::vector<SessionSummary> summary;
};

/// Raised when a state bound is broken after integration.
class SimulationInvariantError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Stepwise world state. Each step: admit arrivals (FIFO per plug level),
/// drop completed or departed sessions, control, integrate, log.
class Simulation {
public:
  /// Throws ConfigError when the scenario is invalid.
  explicit Simulation(ScenarioConfig cfg);

  StepLog step();
  bool done() const { return step_index_ >= cfg_.steps(); }
  double time_s() const;
  RunResult finish() &&;

  const ScenarioConfig &config() const { return cfg_; }
  double storage_kwh() const { return storage_.y_kwh; }

private:
  struct Active {
    std::size_t event;
    std::size_t plug;
    ChargingSession session;
  };

  void admit(double t);
  void retire(double t);

  ScenarioConfig cfg_;
  PlantConfig plant_;
  PvProfile pv_;
  std::vector<std::size_t> pending_; // fleet indices by arrival
  std::size_t next_pending_ = 0;
  std::deque<std::size_t> queue_;
  std::vector<bool> plug_busy_;
  std::vector<Active> active_;
  std::vector<double> x_; // per fleet event
  StorageState storage_;
  ControllerState ctrl_;
  std::size_t step_index_ = 0;
  std::vector<StepLog> logs_;
  std::vector<SessionSummary> summary_;
};

RunResult run(const ScenarioConfig &cfg);

/// Independent runs evaluated concurrently; results keep input order.
std::vector<RunResult> run_many(std::span<const ScenarioConfig> cfgs);

} // namespace fcs
