#include <doctest.h>

#include <cmath>
#include <random>

#include "fcs/allocator.hpp"
#include "fcs/controller.hpp"
#include "oracles.hpp"

using namespace fcs;

namespace {
PlantConfig plant() {
  PlantConfig p;
  p.station = {120.0, {50, 50, 43, 22}};
  p.storage = {300.0, 150.0, 0.1, 150.0};
  return p;
}

ControllerWeights weights() { return {10.0, 5e6, 3e7, 10.0, 3.0, 60.0}; }

void check_balance(const ControlDecision &d) {
  CHECK(std::abs(d.p_g_kw + d.p_s_kw - d.total_charging_kw()) <= 1e-9);
}
} // namespace

TEST_CASE("mode specialization") {
  const auto w = weights();
  const auto g = specialize(ControlMode::GridConnected, w);
  CHECK(g.beta == 0.0);
  CHECK(g.alpha == w.alpha);
  CHECK(g.gamma == w.gamma);
  CHECK(g.delta == w.delta);
  const auto s = specialize(ControlMode::Standalone, w);
  CHECK(s.gamma == 0.0);
  CHECK(s.delta == 0.0);
  CHECK(s.alpha == w.alpha);
  CHECK(s.beta == w.beta);
  CHECK(s.e == w.e);
}

TEST_CASE("standalone without sessions is idle") {
  const auto d = control_step(plant(), weights(), ControlMode::Standalone, {}, {{}, {150.0}, 0.0, 0.0});
  CHECK(d.p_s_kw == 0.0);
  CHECK(d.p_g_kw == 0.0);
  CHECK(d.y_next_kwh == 150.0);
  CHECK(d.objective == doctest::Approx(0.0));
  CHECK_FALSE(d.fallback);
}

TEST_CASE("grid-connected scalar problem matches a 1-D search") {
  // one 120 kW load from a single 120 kW plug
  PlantConfig p = plant();
  p.station = {120.0, {120.0}};
  const std::vector<ChargingSession> s{{"a", 0.0, 0.0, 200.0, 10.0, 120.0}};
  const auto w = weights();
  const auto d = control_step(p, w, ControlMode::GridConnected, {}, {s, {150.0}, 0.0, 0.0});
  REQUIRE(d.sessions.size() == 1);
  CHECK(d.sessions[0].p_kw == 120.0);
  check_balance(d);

  const double T = 1.0 / 60.0, k = 1.1 * T;
  double best_g = 0.0, best_f = std::numeric_limits<double>::infinity();
  for (double g = -20.0; g <= 140.0 + 1e-9; g += 0.001) {
    const double y_next = 150.0 - k * (120.0 - g);
    const double f = w.alpha * (y_next - 150.0) * (y_next - 150.0) + w.gamma * g * g +
                     w.delta * g * g;
    if (f < best_f) {
      best_f = f;
      best_g = g;
    }
  }
  CHECK(std::abs(d.p_g_kw - best_g) <= 0.001);
  // closed form of the same scalar problem
  const double exact = w.alpha * k * k * 120.0 / (w.alpha * k * k + w.gamma + w.delta);
  CHECK(d.p_g_kw == doctest::Approx(exact).epsilon(1e-9));
  CHECK(d.kkt_residual <= 1e-8);
}

TEST_CASE("standalone single session served from storage") {
  const std::vector<ChargingSession> s{{"a", 0.0, 0.0, 60.0, 5.0, 50.0}};
  const auto d = control_step(plant(), weights(), ControlMode::Standalone, {}, {s, {250.0}, 0.0, 0.0});
  CHECK(d.sessions[0].p_ref_kw == 50.0);
  CHECK(d.sessions[0].p_kw == doctest::Approx(50.0).epsilon(1e-6));
  CHECK(d.p_s_kw == doctest::Approx(50.0).epsilon(1e-6));
  CHECK(d.p_g_kw == 0.0);
  check_balance(d);
  CHECK(d.y_next_kwh == doctest::Approx(250.0 - 1.1 * 50.0 / 60.0).epsilon(1e-6));
}

TEST_CASE("grid-connected with PV equal to the load") {
  const std::vector<ChargingSession> s{{"a", 0.0, 0.0, 60.0, 5.0, 50.0}};
  const auto d = control_step(plant(), weights(), ControlMode::GridConnected, {}, {s, {150.0}, 50.0, 0.0});
  CHECK(d.sessions[0].p_kw == 50.0);
  CHECK(std::abs(d.p_g_kw) <= 1e-6);
  CHECK(d.p_s_kw == doctest::Approx(50.0).epsilon(1e-6));
  check_balance(d);
  // PV inflow and storage outflow cancel up to the loss factor
  CHECK(d.y_next_kwh == doctest::Approx(150.0 - 1.1 * d.p_s_kw / 60.0 + 50.0 / 60.0).epsilon(1e-12));
}

TEST_CASE("grid-connected delivers the references exactly") {
  std::vector<ChargingSession> s{{"a", 0.0, 0.0, 60.0, 5.0, 50.0},
                                 {"b", 60.0, 0.0, 60.0, 5.0, 50.0},
                                 {"c", 120.0, 0.0, 60.0, 5.0, 43.0}};
  const auto d = control_step(plant(), weights(), ControlMode::GridConnected, {3.0}, {s, {100.0}, 10.0, 600.0});
  for (const auto &sp : d.sessions)
    CHECK(sp.p_kw == sp.p_ref_kw);
  CHECK(d.total_reference_kw() == doctest::Approx(120.0));
  check_balance(d);
}

TEST_CASE("standalone decisions respect the on/off sets and storage limits") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double plugs[] = {50, 50, 43, 22};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ChargingSession> s;
    const int n = 1 + trial % 4;
    for (int i = 0; i < n; ++i)
      s.push_back({"s" + std::to_string(i), 60.0 * i, 20.0 * u(rng), 60.0, 2.0 + 8.0 * u(rng), plugs[i]});
    const double y = 300.0 * u(rng) * u(rng);
    const double pv = 100.0 * u(rng);
    const auto d = control_step(plant(), weights(), ControlMode::Standalone, {}, {s, {y}, pv, 600.0});
    CHECK(d.p_g_kw == 0.0);
    check_balance(d);
    CHECK(d.y_next_kwh >= -1e-9);
    CHECK(d.y_next_kwh <= 300.0 + 1e-9);
    CHECK(d.p_s_kw * 1.1 <= 150.0 + 1e-9);
    for (std::size_t m = 0; m < s.size(); ++m) {
      const auto &sp = d.sessions[m];
      CHECK((sp.p_kw == 0.0 || (sp.p_kw >= s[m].p_min_kw - 1e-9 && sp.p_kw <= sp.p_ref_kw + 1e-9)));
    }
    if (!d.fallback)
      CHECK(d.kkt_residual <= 1e-8);
  }
}

TEST_CASE("decision matches brute force on small instances") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto w = weights();
  for (int trial = 0; trial < 20; ++trial) {
    const bool grid = trial % 2 == 0;
    const int n = 1 + (trial / 2) % 2;
    std::vector<ChargingSession> s;
    for (int i = 0; i < n; ++i)
      s.push_back({"s", 60.0 * i, 30.0 * u(rng), 40.0, 3.0 + 5.0 * u(rng), i == 0 ? 22.0 : 43.0});
    const double y = 300.0 * u(rng), pv = 100.0 * u(rng), prev = 5.0 * u(rng);
    const double t = 600.0;
    const auto d = control_step(plant(), w, grid ? ControlMode::GridConnected : ControlMode::Standalone,
                                {prev}, {s, {y}, pv, t});

    const auto refs = allocator::reference_setpoints(s, t, w, 120.0);
    oracle::MpcInstance m;
    m.grid_mode = grid;
    m.alpha = w.alpha;
    m.beta = w.beta;
    m.gamma = w.gamma;
    m.delta = w.delta;
    m.y = y;
    m.y_max = 300.0;
    m.y_ref = 150.0;
    m.eps = 0.1;
    m.p_s_max = 150.0;
    m.pv = pv;
    m.p_g_prev = prev;
    m.p_bar = refs.p_bar;
    m.w = refs.weights.w;
    for (const auto &x : s)
      m.p_min.push_back(x.p_min_kw);
    const auto b = oracle::mpc_brute_force(m);
    REQUIRE(std::isfinite(b.f));
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(d.sessions[i].p_kw - b.p[i]) <= 0.05);
    CHECK(std::abs(d.p_s_kw - b.p_s) <= 0.05);
    CHECK(std::abs(d.p_g_kw - b.p_g) <= 0.05);
  }
}

TEST_CASE("full storage with surplus PV falls back to curtailment") {
  const auto d = control_step(plant(), weights(), ControlMode::Standalone, {}, {{}, {299.9}, 90.0, 0.0});
  CHECK(d.fallback);
  CHECK(d.p_s_kw == 0.0);
  CHECK(d.p_pv_kw == doctest::Approx(6.0));
  CHECK(d.y_next_kwh == doctest::Approx(300.0));
}

TEST_CASE("empty storage without PV keeps sessions waiting") {
  const std::vector<ChargingSession> s{{"a", 0.0, 0.0, 60.0, 8.0, 50.0}};
  const auto d = control_step(plant(), weights(), ControlMode::Standalone, {}, {s, {0.0}, 0.0, 0.0});
  CHECK(d.sessions[0].p_kw == 0.0);
  CHECK(std::abs(d.p_s_kw) <= 1e-12);
  CHECK(std::abs(d.y_next_kwh) <= 1e-12);

  // enough PV for the minimum power but not for the reference
  const auto e = control_step(plant(), weights(), ControlMode::Standalone, {}, {s, {0.0}, 20.0, 0.0});
  CHECK(e.sessions[0].p_kw == doctest::Approx(20.0 / 1.1).epsilon(1e-9));
  CHECK(e.y_next_kwh == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("reference below the minimum power switches the session off") {
  // the late session absorbs nearly all of the 23 kW deficit
  std::vector<ChargingSession> s{{"a", 0.0, 0.0, 100.0, 4.0, 50.0},
                                 {"b", 0.0, 0.0, 100.0, 4.0, 50.0},
                                 {"d", 2640.0, 0.0, 100.0, 30.0, 43.0}};
  const auto d = control_step(plant(), weights(), ControlMode::Standalone, {}, {s, {200.0}, 0.0, 2700.0});
  CHECK(d.sessions[2].p_ref_kw < 30.0);
  CHECK(d.sessions[2].p_ref_kw > 0.0);
  CHECK(d.sessions[2].p_kw == 0.0);
  CHECK(d.sessions[0].p_kw > 49.9);
}

TEST_CASE("hard lower bound reading") {
  PlantConfig p = plant();
  p.flags.hard_lower_bound = true;
  const std::vector<ChargingSession> s{{"a", 0.0, 0.0, 60.0, 8.0, 50.0}};
  const auto d = control_step(p, weights(), ControlMode::Standalone, {}, {s, {0.0}, 30.0, 0.0});
  CHECK(d.sessions[0].p_kw >= 8.0);
  // infeasible with no energy at all
  const auto e = control_step(p, weights(), ControlMode::Standalone, {}, {s, {0.0}, 0.0, 0.0});
  CHECK(e.fallback);
  CHECK(e.sessions[0].p_kw == 0.0);
}

TEST_CASE("physical losses pick the cheaper storage branch") {
  PlantConfig p = plant();
  p.flags.physical_losses = true;
  const std::vector<ChargingSession> s{{"a", 0.0, 0.0, 60.0, 5.0, 50.0}};
  const auto d = control_step(p, weights(), ControlMode::Standalone, {}, {s, {150.0}, 0.0, 0.0});
  CHECK(d.p_s_kw == doctest::Approx(50.0).epsilon(1e-6));
  CHECK(d.y_next_kwh == doctest::Approx(150.0 - 1.1 * 50.0 / 60.0).epsilon(1e-6));

  // grid import charges the storage through the 1/(1+eps) branch
  const auto g = control_step(p, weights(), ControlMode::GridConnected, {}, {{}, {100.0}, 0.0, 0.0});
  CHECK(g.p_s_kw <= 0.0);
  CHECK(g.y_next_kwh == doctest::Approx(100.0 - g.p_s_kw / (1.1 * 60.0)).epsilon(1e-12));
  check_balance(g);
}

TEST_CASE("invalid step inputs") {
  CHECK_THROWS_AS(control_step(plant(), weights(), ControlMode::Standalone, {}, {{}, {150.0}, -1.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(control_step(plant(), weights(), ControlMode::Standalone, {}, {{}, {301.0}, 0.0, 0.0}),
                  std::invalid_argument);
}
