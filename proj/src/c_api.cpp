#include "fcs/fcs.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fcs/allocator.hpp"
#include "fcs/plant.hpp"
#include "fcs/scenario.hpp"
#include "fcs/trace_writer.hpp"

struct fcs_scenario {
  fcs::ScenarioConfig cfg;
  mutable std::vector<std::string> errors;
};

struct fcs_result {
  fcs::RunResult run;
};

namespace {

thread_local std::string g_last_error;

fcs_status fail(fcs_status status, std::string msg) {
  g_last_error = std::move(msg);
  return status;
}

// Maps exceptions escaping the core onto status codes.
template <class F> fcs_status guarded(F &&f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const fcs::ConfigError &e) {
    return fail(FCS_ERR_CONFIG, e.what());
  } catch (const std::invalid_argument &e) {
    return fail(FCS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::filesystem::filesystem_error &e) {
    return fail(FCS_ERR_IO, e.what());
  } catch (const std::exception &e) {
    return fail(FCS_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(FCS_ERR_RUNTIME, "unknown error");
  }
}

bool get_parameter(const fcs::ScenarioConfig &cfg, const std::string &name, double &out) {
  if (name == "alpha")
    out = cfg.weights.alpha;
  else if (name == "beta")
    out = cfg.weights.beta;
  else if (name == "gamma")
    out = cfg.weights.gamma;
  else if (name == "delta")
    out = cfg.weights.delta;
  else if (name == "e")
    out = cfg.weights.e;
  else if (name == "y0")
    out = cfg.y0_kwh;
  else
    return false;
  return true;
}

} // namespace

extern "C" {

FCS_API const char *fcs_version(void) { return "0.1.0"; }

FCS_API const char *fcs_last_error(void) { return g_last_error.c_str(); }

FCS_API const char *fcs_status_string(fcs_status status) {
  switch (status) {
  case FCS_OK:
    return "ok";
  case FCS_ERR_INVALID_ARGUMENT:
    return "invalid argument";
  case FCS_ERR_CONFIG:
    return "configuration error";
  case FCS_ERR_IO:
    return "i/o error";
  case FCS_ERR_RUNTIME:
    return "runtime error";
  }
  return "unknown status";
}

FCS_API fcs_status fcs_scenario_load(const char *path, fcs_scenario **out) {
  if (!path || !out)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    if (!std::filesystem::exists(path))
      return fail(FCS_ERR_IO, std::string("cannot read scenario file '") + path + "'");
    *out = new fcs_scenario{fcs::load_scenario(path), {}};
    return FCS_OK;
  });
}

FCS_API fcs_status fcs_scenario_parse(const char *text, const char *base_dir, fcs_scenario **out) {
  if (!text || !out)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new fcs_scenario{fcs::parse_scenario(text, base_dir ? base_dir : ""), {}};
    return FCS_OK;
  });
}

FCS_API fcs_status fcs_scenario_canonical(fcs_scenario **out) {
  if (!out)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new fcs_scenario{fcs::canonical_scenario(), {}};
    return FCS_OK;
  });
}

FCS_API fcs_status fcs_scenario_clone(const fcs_scenario *s, fcs_scenario **out) {
  if (!s || !out)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new fcs_scenario{s->cfg, {}};
    return FCS_OK;
  });
}

FCS_API void fcs_scenario_free(fcs_scenario *s) { delete s; }

FCS_API fcs_status fcs_scenario_save(const fcs_scenario *s, const char *path) {
  if (!s || !path)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    try {
      fcs::save_scenario(s->cfg, path);
    } catch (const std::runtime_error &e) {
      return fail(FCS_ERR_IO, e.what());
    }
    return FCS_OK;
  });
}

FCS_API fcs_status fcs_scenario_set_mode(fcs_scenario *s, fcs_mode mode) {
  if (!s)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null scenario");
  switch (mode) {
  case FCS_MODE_STANDALONE:
    s->cfg.mode = fcs::ControlMode::Standalone;
    return FCS_OK;
  case FCS_MODE_GRID:
    s->cfg.mode = fcs::ControlMode::GridConnected;
    return FCS_OK;
  }
  return fail(FCS_ERR_INVALID_ARGUMENT, "unknown mode");
}

FCS_API fcs_status fcs_scenario_get_mode(const fcs_scenario *s, fcs_mode *out) {
  if (!s || !out)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null argument");
  *out = s->cfg.mode == fcs::ControlMode::GridConnected ? FCS_MODE_GRID : FCS_MODE_STANDALONE;
  return FCS_OK;
}

FCS_API fcs_status fcs_scenario_set_param(fcs_scenario *s, const char *name, double value) {
  if (!s || !name)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null argument");
  if (!fcs::set_parameter(s->cfg, name, value))
    return fail(FCS_ERR_INVALID_ARGUMENT, std::string("unknown parameter '") + name + "'");
  return FCS_OK;
}

FCS_API fcs_status fcs_scenario_get_param(const fcs_scenario *s, const char *name, double *out) {
  if (!s || !name || !out)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null argument");
  if (!get_parameter(s->cfg, name, *out))
    return fail(FCS_ERR_INVALID_ARGUMENT, std::string("unknown parameter '") + name + "'");
  return FCS_OK;
}

FCS_API fcs_status fcs_scenario_set_seed(fcs_scenario *s, unsigned long long seed) {
  if (!s)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null scenario");
  s->cfg.seed = seed;
  return FCS_OK;
}

FCS_API size_t fcs_scenario_validate(const fcs_scenario *s) {
  if (!s)
    return 0;
  try {
    s->errors = fcs::validate(s->cfg);
  } catch (const std::exception &e) {
    s->errors = {e.what()};
  }
  return s->errors.size();
}

FCS_API const char *fcs_scenario_error(const fcs_scenario *s, size_t index) {
  if (!s || index >= s->errors.size())
    return nullptr;
  return s->errors[index].c_str();
}

FCS_API fcs_status fcs_simulate(const fcs_scenario *s, fcs_result **out) {
  if (!s || !out)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new fcs_result{fcs::run(s->cfg)};
    return FCS_OK;
  });
}

FCS_API fcs_status fcs_simulate_batch(const fcs_scenario *const *scenarios, size_t n,
                                      fcs_result **out) {
  if ((!scenarios || !out) && n > 0)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null argument");
  for (size_t i = 0; i < n; ++i)
    if (!scenarios[i])
      return fail(FCS_ERR_INVALID_ARGUMENT, "null scenario in batch");
  return guarded([&] {
    std::vector<fcs::ScenarioConfig> cfgs;
    for (size_t i = 0; i < n; ++i)
      cfgs.push_back(scenarios[i]->cfg);
    auto runs = fcs::run_many(cfgs);
    for (size_t i = 0; i < n; ++i)
      out[i] = new fcs_result{std::move(runs[i])};
    return FCS_OK;
  });
}

FCS_API void fcs_result_free(fcs_result *r) { delete r; }

FCS_API size_t fcs_result_rows(const fcs_result *r) { return r ? r->run.logs.size() : 0; }

FCS_API size_t fcs_result_sessions(const fcs_result *r) { return r ? r->run.session_ids.size() : 0; }

FCS_API const char *fcs_result_session_id(const fcs_result *r, size_t session) {
  if (!r || session >= r->run.session_ids.size())
    return nullptr;
  return r->run.session_ids[session].c_str();
}

FCS_API fcs_status fcs_result_row(const fcs_result *r, size_t row, fcs_row *out) {
  if (!r || !out)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null argument");
  if (row >= r->run.logs.size())
    return fail(FCS_ERR_INVALID_ARGUMENT, "row index out of range");
  const auto &l = r->run.logs[row];
  *out = {l.t_s,       l.y_kwh,        l.p_pv_kw,      l.p_s_kw,          l.p_g_kw,
          l.p_total_kw, l.ref_total_kw, l.kkt_residual, l.fallback ? 1 : 0};
  return FCS_OK;
}

FCS_API fcs_status fcs_result_session(const fcs_result *r, size_t row, size_t session,
                                      double *ref_kw, double *p_kw, double *x_kwh) {
  if (!r)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null result");
  if (row >= r->run.logs.size() || session >= r->run.session_ids.size())
    return fail(FCS_ERR_INVALID_ARGUMENT, "index out of range");
  const auto &s = r->run.logs[row].sessions[session];
  if (ref_kw)
    *ref_kw = s.ref_kw;
  if (p_kw)
    *p_kw = s.p_kw;
  if (x_kwh)
    *x_kwh = s.x_kwh;
  return FCS_OK;
}

FCS_API fcs_status fcs_result_write(const fcs_result *r, const char *out_dir) {
  if (!r || !out_dir)
    return fail(FCS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    try {
      fcs::write_logs(r->run, out_dir);
    } catch (const std::runtime_error &e) {
      return fail(FCS_ERR_IO, e.what());
    }
    return FCS_OK;
  });
}

FCS_API fcs_status fcs_allocate_setpoints(const double *p_raw, const double *w, size_t n,
                                          double budget_kw, double *p_out, double *lambda_out) {
  if (n > 0 && (!p_raw || !w || !p_out))
    return fail(FCS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto sol = fcs::allocator::allocate_setpoints({p_raw, n}, {w, n}, budget_kw);
    std::copy(sol.p_bar.begin(), sol.p_bar.end(), p_out);
    if (lambda_out)
      *lambda_out = sol.lambda;
    return FCS_OK;
  });
}

} // extern "C"
