#include "fcs/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fcs::allocator {

bool is_complete(const ChargingSession &s) { return s.x_max_kwh - s.x_kwh <= kCompletionTolKwh; }

double desired_rate(const ChargingSession &s, double sampling_h) {
  return (s.x_max_kwh - s.x_kwh) / sampling_h;
}

double clamp_rate(double rate_kw, const ChargingSession &s) {
  if (rate_kw < s.p_min_kw)
    return s.p_min_kw;
  if (rate_kw > s.p_max_kw)
    return s.p_max_kw;
  return rate_kw;
}

PriorityWeights priority_weights(std::span<const ChargingSession> sessions, double t_s, double e,
                                 double sampling_s) {
  PriorityWeights out;
  out.w.reserve(sessions.size());
  for (const auto &s : sessions) {
    const double periods = (t_s - s.t_arr_s) / sampling_s + 1.0;
    out.w.push_back(e == 0.0 ? 1.0 : std::pow(periods, e));
  }
  return out;
}

SetpointVector allocate_setpoints(std::span<const double> p_raw, std::span<const double> w,
                                  double budget_kw) {
  if (p_raw.size() != w.size())
    throw std::invalid_argument("allocate_setpoints: reference and weight sizes differ");
  for (std::size_t m = 0; m < w.size(); ++m) {
    if (!(w[m] > 0.0))
      throw std::invalid_argument("allocate_setpoints: weights must be positive");
    if (!(p_raw[m] >= 0.0))
      throw std::invalid_argument("allocate_setpoints: references must be non-negative");
  }

  SetpointVector out;
  out.p_bar.assign(p_raw.begin(), p_raw.end());
  double total = 0.0;
  for (double p : p_raw)
    total += p;
  if (total <= budget_kw)
    return out;

  const double budget = std::max(budget_kw, 0.0);
  // P_m = P_raw_m - lambda / w_m on the free set; sessions driven below zero
  // are pinned at 0 and lambda recomputed. lambda only grows, so pinned
  // sessions stay pinned.
  std::vector<bool> pinned(p_raw.size(), false);
  double lambda = 0.0;
  for (;;) {
    double free_sum = 0.0, inv_w_sum = 0.0;
    for (std::size_t m = 0; m < p_raw.size(); ++m) {
      if (pinned[m])
        continue;
      free_sum += p_raw[m];
      inv_w_sum += 1.0 / w[m];
    }
    if (inv_w_sum == 0.0) {
      lambda = 0.0;
      break;
    }
    lambda = (free_sum - budget) / inv_w_sum;
    bool changed = false;
    for (std::size_t m = 0; m < p_raw.size(); ++m) {
      if (!pinned[m] && p_raw[m] - lambda / w[m] < 0.0) {
        pinned[m] = true;
        changed = true;
      }
    }
    if (!changed)
      break;
  }

  for (std::size_t m = 0; m < p_raw.size(); ++m)
    out.p_bar[m] = pinned[m] ? 0.0 : p_raw[m] - lambda / w[m];
  out.lambda = lambda;
  return out;
}

double allocation_kkt_residual(std::span<const double> p_raw, std::span<const double> w,
                               double budget_kw, const SetpointVector &sol) {
  const auto &p = sol.p_bar;
  const double lambda = sol.lambda;
  double res = 0.0;
  double total = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    total += p[m];
    // primal
    res = std::max(res, -p[m]);
    res = std::max(res, p[m] - p_raw[m]);
    // stationarity: w (P - P_raw) + lambda - mu_lo + mu_hi = 0 with the bound
    // multipliers chosen optimally for the active side
    const double g = w[m] * (p[m] - p_raw[m]) + lambda;
    const double scale = 1.0 + std::abs(w[m] * p_raw[m]) + std::abs(lambda);
    double r = std::abs(g);
    if (p[m] <= 0.0)
      r = std::max(0.0, -g); // mu_lo = g >= 0 allowed
    if (p[m] >= p_raw[m])
      r = std::min(r, std::max(0.0, g)); // mu_hi = -g >= 0 allowed
    res = std::max(res, r / scale);
  }
  res = std::max(res, total - budget_kw);
  res = std::max(res, -lambda);
  if (lambda > 0.0)
    res = std::max(res, std::abs(total - budget_kw) * lambda / (1.0 + lambda));
  return res;
}

References reference_setpoints(std::span<const ChargingSession> sessions, double t_s,
                               const ControllerWeights &weights, double p_cs_max_kw) {
  References out;
  out.weights = priority_weights(sessions, t_s, weights.e, weights.sampling_s);
  out.p_raw.assign(sessions.size(), 0.0);
  out.p_bar.assign(sessions.size(), 0.0);

  std::vector<double> raw, w;
  std::vector<std::size_t> index;
  for (std::size_t m = 0; m < sessions.size(); ++m) {
    if (is_complete(sessions[m]))
      continue;
    const double rate = clamp_rate(desired_rate(sessions[m], weights.sampling_h()), sessions[m]);
    out.p_raw[m] = rate;
    raw.push_back(rate);
    w.push_back(out.weights.w[m]);
    index.push_back(m);
  }
  const auto split = allocate_setpoints(raw, w, p_cs_max_kw);
  for (std::size_t k = 0; k < index.size(); ++k)
    out.p_bar[index[k]] = split.p_bar[k];
  out.lambda = split.lambda;
  return out;
}

} // namespace fcs::allocator
