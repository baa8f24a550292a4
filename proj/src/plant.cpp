#include "fcs/plant.hpp"

#include <algorithm>
#include <future>
#include <numeric>

#include "fcs/allocator.hpp"
#include "fcs/qp.hpp"

namespace fcs {

Simulation::Simulation(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
  if (auto errors = validate(cfg_); !errors.empty())
    throw ConfigError(std::move(errors));
  plant_ = {cfg_.station, cfg_.storage, cfg_.flags};
  pv_ = build_pv_profile(cfg_);
  pending_.resize(cfg_.fleet.size());
  std::iota(pending_.begin(), pending_.end(), std::size_t{0});
  std::stable_sort(pending_.begin(), pending_.end(), [&](std::size_t a, std::size_t b) {
    return cfg_.fleet[a].t_arr_s < cfg_.fleet[b].t_arr_s;
  });
  plug_busy_.assign(cfg_.station.plugs_kw.size(), false);
  for (const auto &ev : cfg_.fleet) {
    x_.push_back(ev.x0_kwh);
    summary_.push_back({ev.id, ev.t_arr_s, ev.plug_kw, std::nullopt, std::nullopt, std::nullopt, 0.0});
  }
  storage_.y_kwh = cfg_.y0_kwh;
}

double Simulation::time_s() const { return static_cast<double>(step_index_) * cfg_.weights.sampling_s; }

void Simulation::admit(double t) {
  while (next_pending_ < pending_.size() && cfg_.fleet[pending_[next_pending_]].t_arr_s <= t)
    queue_.push_back(pending_[next_pending_++]);

  for (auto it = queue_.begin(); it != queue_.end();) {
    const FleetEvent &ev = cfg_.fleet[*it];
    const auto &plugs = cfg_.station.plugs_kw;
    std::optional<std::size_t> free;
    for (std::size_t k = 0; k < plugs.size(); ++k)
      if (!plug_busy_[k] && plugs[k] == ev.plug_kw) {
        free = k;
        break;
      }
    if (!free) {
      ++it;
      continue;
    }
    plug_busy_[*free] = true;
    ChargingSession s{ev.id, ev.t_arr_s, x_[*it], ev.x_max_kwh, ev.p_min_kw, ev.plug_kw};
    active_.push_back({*it, *free, std::move(s)});
    summary_[*it].t_connect_s = t;
    it = queue_.erase(it);
  }
}

void Simulation::retire(double t) {
  std::vector<Active> keep;
  for (auto &a : active_) {
    const FleetEvent &ev = cfg_.fleet[a.event];
    if (allocator::is_complete(a.session)) {
      summary_[a.event].t_complete_s = t;
      plug_busy_[a.plug] = false;
    } else if (ev.t_depart_s && *ev.t_depart_s <= t) {
      summary_[a.event].t_leave_s = t;
      plug_busy_[a.plug] = false;
    } else {
      keep.push_back(std::move(a));
    }
  }
  active_ = std::move(keep);
  // vehicles that gave up waiting
  for (auto it = queue_.begin(); it != queue_.end();) {
    const FleetEvent &ev = cfg_.fleet[*it];
    if (ev.t_depart_s && *ev.t_depart_s <= t) {
      summary_[*it].t_leave_s = t;
      it = queue_.erase(it);
    } else {
      ++it;
    }
  }
}

StepLog Simulation::step() {
  if (done())
    throw std::logic_error("simulation already finished");
  const double t = time_s();
  const double T = cfg_.weights.sampling_h();

  admit(t);
  retire(t);

  std::vector<ChargingSession> sessions;
  sessions.reserve(active_.size());
  for (const auto &a : active_)
    sessions.push_back(a.session);

  const double pv = effective_pv(pv_, t);
  const ControlDecision dec =
      control_step(plant_, cfg_.weights, cfg_.mode, ctrl_, {sessions, storage_, pv, t});

  StepLog row;
  row.t_s = t;
  row.y_kwh = storage_.y_kwh;
  row.sessions.resize(cfg_.fleet.size());
  for (std::size_t i = 0; i < cfg_.fleet.size(); ++i)
    row.sessions[i].x_kwh = x_[i];
  for (std::size_t m = 0; m < active_.size(); ++m) {
    auto &tr = row.sessions[active_[m].event];
    tr.active = true;
    tr.raw_kw = dec.sessions[m].p_raw_kw;
    tr.ref_kw = dec.sessions[m].p_ref_kw;
    tr.p_kw = dec.sessions[m].p_kw;
  }
  row.ref_total_kw = dec.total_reference_kw();
  row.p_total_kw = dec.total_charging_kw();
  row.p_pv_kw = dec.p_pv_kw;
  row.p_s_kw = dec.p_s_kw;
  row.p_g_kw = dec.p_g_kw;
  row.kkt_residual = dec.kkt_residual;
  row.fallback = dec.fallback;

  // integrate; the charging power is assumed to be tracked exactly, the
  // battery saturates at capacity
  for (std::size_t m = 0; m < active_.size(); ++m) {
    auto &a = active_[m];
    const double before = a.session.x_kwh;
    a.session.x_kwh = std::min(a.session.x_max_kwh, before + T * dec.sessions[m].p_kw);
    x_[a.event] = a.session.x_kwh;
    summary_[a.event].energy_kwh += a.session.x_kwh - before;
  }
  const double tol = qp::kTolerances.feasibility;
  if (dec.y_next_kwh < -tol || dec.y_next_kwh > cfg_.storage.y_max_kwh + tol)
    throw SimulationInvariantError("storage state of charge " + std::to_string(dec.y_next_kwh) +
                                   " kWh left [0, capacity] at t=" + std::to_string(t) + " s");
  storage_.y_kwh = std::clamp(dec.y_next_kwh, 0.0, cfg_.storage.y_max_kwh);
  ctrl_.p_g_prev_kw = dec.p_g_kw;

  ++step_index_;
  logs_.push_back(row);
  return row;
}

RunResult Simulation::finish() && {
  RunResult out;
  for (const auto &ev : cfg_.fleet)
    out.session_ids.push_back(ev.id);
  out.logs = std::move(logs_);
  out.summary = std::move(summary_);
  return out;
}

RunResult run(const ScenarioConfig &cfg) {
  Simulation sim(cfg);
  while (!sim.done())
    sim.step();
  return std::move(sim).finish();
}

std::vector<RunResult> run_many(std::span<const ScenarioConfig> cfgs) {
  std::vector<std::future<RunResult>> jobs;
  jobs.reserve(cfgs.size());
  for (const auto &cfg : cfgs)
    jobs.push_back(std::async(std::launch::async, [&cfg] { return run(cfg); }));
  std::vector<RunResult> out;
  out.reserve(cfgs.size());
  for (auto &j : jobs)
    out.push_back(j.get());
  return out;
}

} // namespace fcs
