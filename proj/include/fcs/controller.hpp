#pragma once

// One control iteration: allocate charging references, then dispatch storage
// and grid power with a one-step MPC problem whose form depends on the mode.

#include <span>

#include "fcs/domain.hpp"
#include "fcs/qp.hpp"

namespace fcs {

/// Static description of the service area seen by the controller.
struct PlantConfig {
  StationConfig station;
  StorageConfig storage;
  ModelFlags flags;
};

/// Carried between control iterations by the caller.
struct ControllerState {
  double p_g_prev_kw = 0.0;
};

struct StepInputs {
  std::span<const ChargingSession> sessions;
  StorageState storage;
  double pv_kw = 0.0; // effective PV power at t
  double t_s = 0.0;
};

/// Grid-connected drops the charging-tracking term (P is fixed to the
/// references); standalone drops the grid terms (P_g is pinned to zero).
ControllerWeights specialize(ControlMode mode, ControllerWeights w);

/// Decision variables are ordered [P_1 .. P_n, P_s, P_g].
struct MpcProblem {
  qp::Problem qp;
  qp::SemiContinuousSpec semi;
  double constant = 0.0;       // objective offset dropped from qp
  double storage_gain_h = 0.0; // dy/dP_s = -storage_gain_h
  std::vector<double> p_raw;   // clamped desired rates
  std::vector<double> p_bar;   // allocated references
  std::vector<double> weights; // priority weights
};

/// Which side of the storage power the problem covers. `Any` is the literal
/// single-loss-factor model; the two half-lines are used with physical losses.
enum class StorageBranch { Any, Discharge, Charge };

MpcProblem build_mpc_problem(const PlantConfig &plant, const ControllerWeights &weights,
                             ControlMode mode, const ControllerState &state,
                             const StepInputs &in, StorageBranch branch = StorageBranch::Any);

ControlDecision control_step(const PlantConfig &plant, const ControllerWeights &weights,
                             ControlMode mode, const ControllerState &state, const StepInputs &in);

} // namespace fcs
