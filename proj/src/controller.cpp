#include "fcs/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fcs/allocator.hpp"

namespace fcs {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

ControllerWeights specialize(ControlMode mode, ControllerWeights w) {
  if (mode == ControlMode::GridConnected) {
    w.beta = 0.0;
  } else {
    w.gamma = 0.0;
    w.delta = 0.0;
  }
  return w;
}

MpcProblem build_mpc_problem(const PlantConfig &plant, const ControllerWeights &weights,
                             ControlMode mode, const ControllerState &state,
                             const StepInputs &in, StorageBranch branch) {
  const auto &st = plant.storage;
  const auto n = static_cast<Eigen::Index>(in.sessions.size());
  const Eigen::Index is = n, ig = n + 1;
  const double T = weights.sampling_h();
  const ControllerWeights w = specialize(mode, weights);

  const auto refs = allocator::reference_setpoints(in.sessions, in.t_s, weights,
                                                   plant.station.p_cs_max_kw);

  MpcProblem out;
  out.p_raw = refs.p_raw;
  out.p_bar = refs.p_bar;
  out.weights = refs.weights.w;
  switch (branch) {
  case StorageBranch::Any:
  case StorageBranch::Discharge:
    out.storage_gain_h = (1.0 + st.eps_s) * T;
    break;
  case StorageBranch::Charge:
    out.storage_gain_h = T / (1.0 + st.eps_s);
    break;
  }
  const double k = out.storage_gain_h;

  qp::Problem &p = out.qp;
  p = qp::Problem::unconstrained(n + 2);
  out.semi.vars.assign(static_cast<std::size_t>(n + 2), std::nullopt);

  for (Eigen::Index m = 0; m < n; ++m) {
    const auto &s = in.sessions[static_cast<std::size_t>(m)];
    const double ref = refs.p_bar[static_cast<std::size_t>(m)];
    const double wm = refs.weights.w[static_cast<std::size_t>(m)];
    // beta * w (P - ref)^2
    p.Q(m, m) = 2.0 * w.beta * wm;
    p.c(m) = -2.0 * w.beta * wm * ref;
    out.constant += w.beta * wm * ref * ref;

    if (mode == ControlMode::GridConnected) {
      p.lb(m) = p.ub(m) = ref;
    } else if (allocator::is_complete(s) || ref <= 0.0 || ref < s.p_min_kw) {
      p.lb(m) = p.ub(m) = 0.0;
    } else if (plant.flags.hard_lower_bound) {
      p.lb(m) = s.p_min_kw;
      p.ub(m) = ref;
    } else {
      p.lb(m) = 0.0;
      p.ub(m) = ref;
      out.semi.vars[static_cast<std::size_t>(m)] = qp::OnInterval{s.p_min_kw, ref};
    }
  }

  // alpha (y + T pv - k P_s - y_ref)^2
  const double inflow = in.storage.y_kwh + T * in.pv_kw;
  const double d = inflow - st.y_ref_kwh;
  p.Q(is, is) = 2.0 * w.alpha * k * k;
  p.c(is) = -2.0 * w.alpha * k * d;
  out.constant += w.alpha * d * d;

  // gamma P_g^2 + delta (P_g - P_g_prev)^2
  p.Q(ig, ig) = 2.0 * (w.gamma + w.delta);
  p.c(ig) = -2.0 * w.delta * state.p_g_prev_kw;
  out.constant += w.delta * state.p_g_prev_kw * state.p_g_prev_kw;

  const double ps_cap = st.p_s_max_kw / (1.0 + st.eps_s);
  p.ub(is) = ps_cap;
  p.lb(is) = plant.flags.symmetric_storage_limit ? -ps_cap : -kInf;
  if (branch == StorageBranch::Discharge)
    p.lb(is) = std::max(p.lb(is), 0.0);
  else if (branch == StorageBranch::Charge)
    p.ub(is) = std::min(p.ub(is), 0.0);

  if (mode == ControlMode::Standalone)
    p.lb(ig) = p.ub(ig) = 0.0;

  // 0 <= y_next <= y_max
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n + 2);
  row(is) = k;
  p.add_inequality(row, inflow);
  row(is) = -k;
  p.add_inequality(row, st.y_max_kwh - inflow);

  // P_g + P_s = sum P
  Eigen::RowVectorXd bal = Eigen::RowVectorXd::Zero(n + 2);
  bal.head(n).setConstant(-1.0);
  bal(is) = 1.0;
  bal(ig) = 1.0;
  p.add_equality(bal, 0.0);
  return out;
}

ControlDecision control_step(const PlantConfig &plant, const ControllerWeights &weights,
                             ControlMode mode, const ControllerState &state, const StepInputs &in) {
  if (!(in.pv_kw >= 0.0))
    throw std::invalid_argument("control_step: PV power must be non-negative");
  check_invariants(plant.storage, in.storage);

  std::vector<StorageBranch> branches{StorageBranch::Any};
  if (plant.flags.physical_losses)
    branches = {StorageBranch::Discharge, StorageBranch::Charge};

  const auto n = in.sessions.size();
  const double T = weights.sampling_h();
  ControlDecision best;
  bool have = false;
  std::vector<double> p_raw, p_bar;
  for (StorageBranch b : branches) {
    MpcProblem mpc = build_mpc_problem(plant, weights, mode, state, in, b);
    p_raw = mpc.p_raw;
    p_bar = mpc.p_bar;
    qp::Solution sol = mode == ControlMode::Standalone
                           ? qp::solve_semicontinuous(mpc.qp, mpc.semi).solution
                           : qp::solve_qp(mpc.qp);
    if (!sol.optimal())
      continue;
    const double total = sol.objective + mpc.constant;
    if (have && !(total < best.objective))
      continue;
    have = true;
    best.sessions.clear();
    for (std::size_t m = 0; m < n; ++m)
      best.sessions.push_back({in.sessions[m].id, mpc.p_raw[m], mpc.p_bar[m], sol.x(static_cast<Eigen::Index>(m))});
    best.p_s_kw = sol.x(static_cast<Eigen::Index>(n));
    best.p_g_kw = sol.x(static_cast<Eigen::Index>(n + 1));
    best.p_pv_kw = in.pv_kw;
    best.y_next_kwh = in.storage.y_kwh - mpc.storage_gain_h * best.p_s_kw + T * in.pv_kw;
    best.objective = total;
    best.kkt_residual = sol.kkt_residual;
    best.fallback = false;
  }
  if (have)
    return best;

  if (mode == ControlMode::GridConnected)
    throw std::logic_error("control_step: grid-connected dispatch is infeasible");

  // No pattern can keep the storage within bounds: everything off, PV
  // curtailed to what the storage can still absorb.
  ControlDecision off;
  for (std::size_t m = 0; m < n; ++m)
    off.sessions.push_back({in.sessions[m].id, p_raw[m], p_bar[m], 0.0});
  const double headroom_kw = (plant.storage.y_max_kwh - in.storage.y_kwh) / T;
  off.p_pv_kw = std::clamp(in.pv_kw, 0.0, std::max(0.0, headroom_kw));
  off.y_next_kwh = in.storage.y_kwh + T * off.p_pv_kw;
  off.fallback = true;
  return off;
}

} // namespace fcs
