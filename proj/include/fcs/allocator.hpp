#pragma once

// Charging-setpoint definition: per-vehicle desired rate, limit clamping and
// the priority-weighted least-squares split of the station budget.

#include <span>
#include <vector>

#include "fcs/domain.hpp"

namespace fcs::allocator {

/// Sessions with x_max - x at or below this are complete and leave M_t.
inline constexpr double kCompletionTolKwh = 1e-6;

bool is_complete(const ChargingSession &s);

/// (x_max - x) / T, T in hours.
double desired_rate(const ChargingSession &s, double sampling_h);

/// Clamp into [p_min, p_max].
double clamp_rate(double rate_kw, const ChargingSession &s);

/// Diagonal of the priority matrix.
struct PriorityWeights {
  std::vector<double> w;
};

/// w_m = ((t - t_arr_m) / T + 1)^e, elapsed time in sampling periods.
PriorityWeights priority_weights(std::span<const ChargingSession> sessions, double t_s, double e,
                                 double sampling_s);

struct SetpointVector {
  std::vector<double> p_bar;
  double lambda = 0.0; // budget multiplier, 0 when the budget is slack
};

/// Minimize 1/2 (P - P_raw)^T diag(w) (P - P_raw) s.t. sum(P) <= budget and
/// 0 <= P <= P_raw, by active-set waterfilling. Feasible input is returned
/// unchanged. Throws std::invalid_argument on size mismatch, a non-positive
/// weight or a negative reference.
SetpointVector allocate_setpoints(std::span<const double> p_raw, std::span<const double> w,
                                  double budget_kw);

/// Max KKT violation of `sol` for the allocation problem (stationarity is
/// scaled by the weight magnitudes).
double allocation_kkt_residual(std::span<const double> p_raw, std::span<const double> w,
                               double budget_kw, const SetpointVector &sol);

/// Eq. 1 -> Eq. 2 -> budget split for the active (non-complete) sessions.
/// Completed sessions get a zero reference.
struct References {
  std::vector<double> p_raw; // clamped desired rates, 0 for complete sessions
  std::vector<double> p_bar; // after the budget split
  PriorityWeights weights;   // for every session, including complete ones
  double lambda = 0.0;
};

References reference_setpoints(std::span<const ChargingSession> sessions, double t_s,
                               const ControllerWeights &weights, double p_cs_max_kw);

} // namespace fcs::allocator
