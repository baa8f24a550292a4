#include "fcs/domain.hpp"

#include <algorithm>
#include <numeric>

namespace fcs {

const char *to_string(ControlMode mode) {
  switch (mode) {
  case ControlMode::GridConnected:
    return "grid";
  case ControlMode::Standalone:
    return "standalone";
  }
  return "unknown";
}

std::optional<ControlMode> parse_mode(const std::string &text) {
  if (text == "grid" || text == "grid_connected" || text == "grid-connected")
    return ControlMode::GridConnected;
  if (text == "standalone" || text == "stand_alone")
    return ControlMode::Standalone;
  return std::nullopt;
}

double ControlDecision::total_charging_kw() const {
  return std::accumulate(sessions.begin(), sessions.end(), 0.0,
                         [](double acc, const SessionPower &s) { return acc + s.p_kw; });
}

double ControlDecision::total_reference_kw() const {
  return std::accumulate(sessions.begin(), sessions.end(), 0.0,
                         [](double acc, const SessionPower &s) { return acc + s.p_ref_kw; });
}

double effective_pv(const PvProfile &profile, double t_s) {
  if (profile.samples.empty() || t_s < profile.t_begin() || t_s > profile.t_end())
    throw std::out_of_range("PV profile does not cover t=" + std::to_string(t_s) + " s");
  // last sample with t <= t_s
  auto it = std::upper_bound(profile.samples.begin(), profile.samples.end(), t_s,
                             [](double t, const PvProfile::Sample &s) { return t < s.t_s; });
  const double raw = std::prev(it)->raw_kw;
  return std::max(0.0, raw * (1.0 - profile.eps_pv));
}

void check_invariants(const ChargingSession &s) {
  if (!(s.x_kwh >= 0.0 && s.x_kwh <= s.x_max_kwh))
    throw std::invalid_argument("session " + s.id + ": state of charge outside [0, x_max]");
  if (!(s.p_min_kw > 0.0 && s.p_min_kw <= s.p_max_kw))
    throw std::invalid_argument("session " + s.id + ": requires 0 < p_min <= p_max");
}

void check_invariants(const StorageConfig &c) {
  if (!(c.y_ref_kwh > 0.0 && c.y_ref_kwh <= c.y_max_kwh))
    throw std::invalid_argument("storage: requires 0 < y_ref <= y_max");
  if (!(c.eps_s >= 0.0))
    throw std::invalid_argument("storage: loss must be non-negative");
  if (!(c.p_s_max_kw > 0.0))
    throw std::invalid_argument("storage: p_s_max must be positive");
}

void check_invariants(const StorageConfig &c, const StorageState &s) {
  check_invariants(c);
  if (!(s.y_kwh >= 0.0 && s.y_kwh <= c.y_max_kwh))
    throw std::invalid_argument("storage: state of charge outside [0, y_max]");
}

} // namespace fcs
