#include "fcs/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fcs {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string> &errors) {
  std::string out = "invalid scenario:";
  for (const auto &e : errors)
    out += "\n  " + e;
  return out;
}

// Strict reader over one JSON object: records missing/mistyped/unknown keys.
class ObjectReader {
public:
  ObjectReader(const json &j, std::string path, std::vector<std::string> &errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object())
      errors_.push_back(path_ + ": expected an object");
  }

  ~ObjectReader() {
    if (!j_.is_object())
      return;
    for (const auto &[key, _] : j_.items())
      if (!seen_.count(key))
        errors_.push_back(path_ + "." + key + ": unknown key");
  }

  ObjectReader(const ObjectReader &) = delete;
  ObjectReader &operator=(const ObjectReader &) = delete;

  bool has(const std::string &key) const { return j_.is_object() && j_.contains(key); }

  const json *child(const std::string &key, bool required = true) {
    seen_.insert(key);
    if (!j_.is_object())
      return nullptr;
    auto it = j_.find(key);
    if (it == j_.end()) {
      if (required)
        errors_.push_back(path_ + "." + key + ": missing required key");
      return nullptr;
    }
    return &*it;
  }

  void number(const std::string &key, double &out, bool required = true) {
    if (const json *v = child(key, required)) {
      if (v->is_number())
        out = v->get<double>();
      else
        errors_.push_back(path_ + "." + key + ": expected a number");
    }
  }

  void optional_number(const std::string &key, std::optional<double> &out) {
    if (const json *v = child(key, false)) {
      if (v->is_number())
        out = v->get<double>();
      else
        errors_.push_back(path_ + "." + key + ": expected a number");
    }
  }

  void boolean(const std::string &key, bool &out) {
    if (const json *v = child(key, false)) {
      if (v->is_boolean())
        out = v->get<bool>();
      else
        errors_.push_back(path_ + "." + key + ": expected true or false");
    }
  }

  void string(const std::string &key, std::string &out, bool required = true) {
    if (const json *v = child(key, required)) {
      if (v->is_string())
        out = v->get<std::string>();
      else
        errors_.push_back(path_ + "." + key + ": expected a string");
    }
  }

  const std::string &path() const { return path_; }
  std::vector<std::string> &errors() { return errors_; }

private:
  const json &j_;
  std::string path_;
  std::vector<std::string> &errors_;
  std::set<std::string> seen_;
};

void read_pv(const json &j, const std::filesystem::path &base_dir, PvConfig &pv,
             std::vector<std::string> &errors) {
  ObjectReader r(j, "pv", errors);
  r.number("nominal_kw", pv.nominal_kw);
  r.number("loss", pv.eps_pv);
  const bool synthetic = r.has("synthetic");
  const bool csv = r.has("csv");
  if (synthetic == csv) {
    r.child("synthetic", false);
    r.child("csv", false);
    errors.push_back("pv: exactly one of 'synthetic' or 'csv' is required");
    return;
  }
  if (synthetic) {
    SyntheticPv s;
    ObjectReader sr(*r.child("synthetic"), "pv.synthetic", errors);
    sr.number("peak_kw", s.peak_kw);
    sr.number("center_s", s.center_s);
    sr.number("width_s", s.width_s);
    sr.number("noise", s.noise, false);
    pv.source = s;
  } else {
    const json *v = r.child("csv");
    if (!v->is_string()) {
      errors.push_back("pv.csv: expected a file path");
      return;
    }
    std::filesystem::path p = v->get<std::string>();
    if (p.is_relative())
      p = base_dir / p;
    CsvPv c;
    std::error_code ec;
    auto resolved = std::filesystem::weakly_canonical(p, ec);
    c.path = (ec ? p : resolved).string();
    try {
      c.samples = read_pv_csv(c.path);
    } catch (const std::exception &e) {
      errors.push_back(std::string("pv.csv: ") + e.what());
    }
    pv.source = std::move(c);
  }
}

ScenarioConfig from_json(const json &root, const std::filesystem::path &base_dir) {
  std::vector<std::string> errors;
  ScenarioConfig cfg;
  {
    ObjectReader r(root, "scenario", errors);
    r.string("name", cfg.name, false);

    if (const json *j = r.child("station")) {
      ObjectReader s(*j, "station", errors);
      s.number("p_cs_max_kw", cfg.station.p_cs_max_kw);
      if (const json *plugs = s.child("plugs_kw")) {
        if (!plugs->is_array())
          errors.push_back("station.plugs_kw: expected an array of numbers");
        else
          for (const auto &v : *plugs) {
            if (v.is_number())
              cfg.station.plugs_kw.push_back(v.get<double>());
            else
              errors.push_back("station.plugs_kw: expected an array of numbers");
          }
      }
    }
    if (const json *j = r.child("storage")) {
      ObjectReader s(*j, "storage", errors);
      s.number("capacity_kwh", cfg.storage.y_max_kwh);
      s.number("p_max_kw", cfg.storage.p_s_max_kw);
      s.number("loss", cfg.storage.eps_s);
      s.number("y_ref_kwh", cfg.storage.y_ref_kwh);
      s.number("y0_kwh", cfg.y0_kwh);
    }
    if (const json *j = r.child("pv"))
      read_pv(*j, base_dir, cfg.pv, errors);
    if (const json *j = r.child("fleet")) {
      if (!j->is_array()) {
        errors.push_back("fleet: expected an array");
      } else {
        for (std::size_t i = 0; i < j->size(); ++i) {
          FleetEvent ev;
          ObjectReader f((*j)[i], "fleet[" + std::to_string(i) + "]", errors);
          f.string("id", ev.id);
          f.number("t_arr_s", ev.t_arr_s);
          f.number("plug_kw", ev.plug_kw);
          f.number("x0_kwh", ev.x0_kwh);
          f.number("x_max_kwh", ev.x_max_kwh);
          f.number("p_min_kw", ev.p_min_kw);
          f.optional_number("t_depart_s", ev.t_depart_s);
          cfg.fleet.push_back(std::move(ev));
        }
      }
    }
    if (const json *j = r.child("weights")) {
      ObjectReader w(*j, "weights", errors);
      w.number("alpha", cfg.weights.alpha);
      w.number("beta", cfg.weights.beta);
      w.number("gamma", cfg.weights.gamma);
      w.number("delta", cfg.weights.delta);
      w.number("e", cfg.weights.e);
    }
    r.number("sampling_s", cfg.weights.sampling_s);
    r.number("horizon_s", cfg.horizon_s);
    std::string mode;
    r.string("mode", mode);
    if (!mode.empty()) {
      if (auto m = parse_mode(mode))
        cfg.mode = *m;
      else
        errors.push_back("scenario.mode: expected 'standalone' or 'grid', got '" + mode + "'");
    }
    if (const json *j = r.child("flags", false)) {
      ObjectReader f(*j, "flags", errors);
      f.boolean("physical_losses", cfg.flags.physical_losses);
      f.boolean("symmetric_storage_limit", cfg.flags.symmetric_storage_limit);
      f.boolean("hard_lower_bound", cfg.flags.hard_lower_bound);
    }
    if (const json *j = r.child("seed", false)) {
      if (j->is_number_unsigned())
        cfg.seed = j->get<std::uint64_t>();
      else
        errors.push_back("scenario.seed: expected a non-negative integer");
    }
  }
  if (errors.empty())
    errors = validate(cfg);
  if (!errors.empty())
    throw ConfigError(std::move(errors));
  return cfg;
}

json to_json(const ScenarioConfig &cfg) {
  json j;
  j["name"] = cfg.name;
  j["station"] = {{"p_cs_max_kw", cfg.station.p_cs_max_kw}, {"plugs_kw", cfg.station.plugs_kw}};
  j["storage"] = {{"capacity_kwh", cfg.storage.y_max_kwh}, {"p_max_kw", cfg.storage.p_s_max_kw},
                  {"loss", cfg.storage.eps_s},          {"y_ref_kwh", cfg.storage.y_ref_kwh},
                  {"y0_kwh", cfg.y0_kwh}};
  json pv = {{"nominal_kw", cfg.pv.nominal_kw}, {"loss", cfg.pv.eps_pv}};
  if (const auto *s = std::get_if<SyntheticPv>(&cfg.pv.source))
    pv["synthetic"] = {{"peak_kw", s->peak_kw},
                       {"center_s", s->center_s},
                       {"width_s", s->width_s},
                       {"noise", s->noise}};
  else
    pv["csv"] = std::get<CsvPv>(cfg.pv.source).path;
  j["pv"] = pv;
  json fleet = json::array();
  for (const auto &ev : cfg.fleet) {
    json e = {{"id", ev.id},         {"t_arr_s", ev.t_arr_s},     {"plug_kw", ev.plug_kw},
              {"x0_kwh", ev.x0_kwh}, {"x_max_kwh", ev.x_max_kwh}, {"p_min_kw", ev.p_min_kw}};
    if (ev.t_depart_s)
      e["t_depart_s"] = *ev.t_depart_s;
    fleet.push_back(std::move(e));
  }
  j["fleet"] = fleet;
  j["weights"] = {{"alpha", cfg.weights.alpha}, {"beta", cfg.weights.beta},
                  {"gamma", cfg.weights.gamma}, {"delta", cfg.weights.delta},
                  {"e", cfg.weights.e}};
  j["sampling_s"] = cfg.weights.sampling_s;
  j["horizon_s"] = cfg.horizon_s;
  j["mode"] = to_string(cfg.mode);
  j["flags"] = {{"physical_losses", cfg.flags.physical_losses},
                {"symmetric_storage_limit", cfg.flags.symmetric_storage_limit},
                {"hard_lower_bound", cfg.flags.hard_lower_bound}};
  j["seed"] = cfg.seed;
  return j;
}

} // namespace

bool CsvPv::operator==(const CsvPv &o) const {
  if (path != o.path || samples.size() != o.samples.size())
    return false;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].t_s != o.samples[i].t_s || samples[i].raw_kw != o.samples[i].raw_kw)
      return false;
  return true;
}

bool operator==(const StationConfig &a, const StationConfig &b) {
  return a.p_cs_max_kw == b.p_cs_max_kw && a.plugs_kw == b.plugs_kw;
}
bool operator==(const StorageConfig &a, const StorageConfig &b) {
  return a.y_max_kwh == b.y_max_kwh && a.p_s_max_kw == b.p_s_max_kw && a.eps_s == b.eps_s &&
         a.y_ref_kwh == b.y_ref_kwh;
}
bool operator==(const ControllerWeights &a, const ControllerWeights &b) {
  return a.alpha == b.alpha && a.beta == b.beta && a.gamma == b.gamma && a.delta == b.delta &&
         a.e == b.e && a.sampling_s == b.sampling_s;
}
bool operator==(const ModelFlags &a, const ModelFlags &b) {
  return a.physical_losses == b.physical_losses &&
         a.symmetric_storage_limit == b.symmetric_storage_limit &&
         a.hard_lower_bound == b.hard_lower_bound;
}
bool operator==(const ScenarioConfig &a, const ScenarioConfig &b) {
  return a.name == b.name && a.station == b.station && a.storage == b.storage &&
         a.y0_kwh == b.y0_kwh && a.pv == b.pv && a.fleet == b.fleet && a.weights == b.weights &&
         a.mode == b.mode && a.horizon_s == b.horizon_s && a.flags == b.flags && a.seed == b.seed;
}

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

std::size_t ScenarioConfig::steps() const {
  return static_cast<std::size_t>(std::llround(horizon_s / weights.sampling_s)) + 1;
}

std::vector<std::string> validate(const ScenarioConfig &cfg) {
  std::vector<std::string> errors;
  auto require = [&](bool ok, const std::string &msg) {
    if (!ok)
      errors.push_back(msg);
  };
  const auto &st = cfg.station;
  require(st.p_cs_max_kw > 0.0, "station.p_cs_max_kw: must be positive");
  require(!st.plugs_kw.empty(), "station.plugs_kw: at least one plug is required");
  for (double p : st.plugs_kw)
    require(p > 0.0, "station.plugs_kw: every plug level must be positive");

  const auto &s = cfg.storage;
  require(s.y_max_kwh > 0.0, "storage.capacity_kwh: must be positive");
  require(s.p_s_max_kw > 0.0, "storage.p_max_kw: must be positive");
  require(s.eps_s >= 0.0, "storage.loss: must be non-negative");
  require(s.y_ref_kwh > 0.0 && s.y_ref_kwh <= s.y_max_kwh,
          "storage.y_ref_kwh: must lie in (0, capacity_kwh]");
  require(cfg.y0_kwh >= 0.0 && cfg.y0_kwh <= s.y_max_kwh,
          "storage.y0_kwh: must lie in [0, capacity_kwh]");

  const auto &w = cfg.weights;
  require(w.alpha >= 0.0 && w.beta >= 0.0 && w.gamma >= 0.0 && w.delta >= 0.0,
          "weights: alpha, beta, gamma, delta must be non-negative");
  require(w.e >= 0.0, "weights.e: must be non-negative");
  const bool sampling_ok = w.sampling_s > 0.0;
  require(sampling_ok, "sampling_s: must be positive");
  require(cfg.horizon_s >= 0.0, "horizon_s: must be non-negative");
  if (sampling_ok && cfg.horizon_s >= 0.0) {
    const double periods = cfg.horizon_s / w.sampling_s;
    require(std::abs(periods - std::round(periods)) < 1e-9,
            "horizon_s: must be a whole number of sampling periods");
  }

  const auto &pv = cfg.pv;
  require(pv.nominal_kw > 0.0, "pv.nominal_kw: must be positive");
  require(pv.eps_pv >= 0.0 && pv.eps_pv < 1.0, "pv.loss: must lie in [0, 1)");
  if (const auto *syn = std::get_if<SyntheticPv>(&pv.source)) {
    require(syn->peak_kw >= 0.0, "pv.synthetic.peak_kw: must be non-negative");
    require(syn->width_s > 0.0, "pv.synthetic.width_s: must be positive");
    require(syn->noise >= 0.0 && syn->noise <= 1.0, "pv.synthetic.noise: must lie in [0, 1]");
  } else {
    const auto &csv = std::get<CsvPv>(pv.source);
    require(!csv.samples.empty(), "pv.csv: no samples");
    for (std::size_t i = 0; i < csv.samples.size(); ++i) {
      if (i > 0 && !(csv.samples[i].t_s > csv.samples[i - 1].t_s)) {
        errors.push_back("pv.csv: sample times must be strictly increasing");
        break;
      }
    }
    if (!csv.samples.empty())
      require(csv.samples.front().t_s <= 0.0 && csv.samples.back().t_s >= cfg.horizon_s,
              "pv.csv: samples must cover [0, horizon_s]");
    for (const auto &smp : csv.samples) {
      const double eff = smp.raw_kw * (1.0 - pv.eps_pv);
      if (!(eff >= 0.0 && eff <= pv.nominal_kw * (1.0 + 1e-12))) {
        errors.push_back("pv.csv: effective sample at t=" + std::to_string(smp.t_s) +
                         " s outside [0, nominal_kw]");
        break;
      }
    }
  }
  // grid-connected dispatch stays feasible as long as the storage can absorb
  // any PV surplus
  if (cfg.mode == ControlMode::GridConnected && errors.empty()) {
    const PvProfile prof = build_pv_profile(cfg);
    for (const auto &smp : prof.samples)
      if (smp.raw_kw * (1.0 - prof.eps_pv) > s.p_s_max_kw) {
        errors.push_back("pv: effective PV power exceeds storage.p_max_kw in grid mode");
        break;
      }
  }

  std::set<std::string> ids;
  for (std::size_t i = 0; i < cfg.fleet.size(); ++i) {
    const auto &ev = cfg.fleet[i];
    const std::string at = "fleet[" + std::to_string(i) + "]";
    require(!ev.id.empty(), at + ".id: must be non-empty");
    require(ids.insert(ev.id).second, at + ".id: duplicate id '" + ev.id + "'");
    require(ev.id.find_first_of(",\"\n\r") == std::string::npos,
            at + ".id: must not contain commas, quotes or newlines");
    require(ev.x_max_kwh > 0.0, at + ".x_max_kwh: must be positive");
    require(ev.x0_kwh >= 0.0 && ev.x0_kwh < ev.x_max_kwh, at + ".x0_kwh: must lie in [0, x_max_kwh)");
    require(ev.p_min_kw > 0.0 && ev.p_min_kw <= ev.plug_kw, at + ".p_min_kw: must lie in (0, plug_kw]");
    require(std::find(st.plugs_kw.begin(), st.plugs_kw.end(), ev.plug_kw) != st.plugs_kw.end(),
            at + ".plug_kw: no station plug has this level");
    require(ev.t_arr_s >= 0.0, at + ".t_arr_s: must be non-negative");
    if (ev.t_depart_s)
      require(*ev.t_depart_s > ev.t_arr_s, at + ".t_depart_s: must be after t_arr_s");
  }
  require(st.plugs_kw.size() <= 12, "station.plugs_kw: at most 12 plugs are supported");
  return errors;
}

ScenarioConfig parse_scenario(const std::string &text, const std::filesystem::path &base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError({std::string("syntax error: ") + e.what()});
  }
  return from_json(root, base_dir);
}

ScenarioConfig load_scenario(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError({"cannot read scenario file '" + path.string() + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.parent_path());
}

std::string dump_scenario(const ScenarioConfig &cfg) { return to_json(cfg).dump(2) + "\n"; }

void save_scenario(const ScenarioConfig &cfg, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write scenario file '" + path.string() + "'");
  out << dump_scenario(cfg);
  if (!out)
    throw std::runtime_error("failed writing scenario file '" + path.string() + "'");
}

std::vector<PvProfile::Sample> read_pv_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read '" + path.string() + "'");
  std::vector<PvProfile::Sample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    double t = 0.0, p = 0.0;
    char comma = 0;
    if (!(ls >> t >> comma >> p) || comma != ',') {
      if (lineno == 1 && out.empty())
        continue; // header
      throw std::runtime_error("malformed line " + std::to_string(lineno) + " in '" +
                               path.string() + "'");
    }
    out.push_back({t, p});
  }
  return out;
}

PvProfile build_pv_profile(const ScenarioConfig &cfg) {
  PvProfile prof;
  prof.eps_pv = cfg.pv.eps_pv;
  prof.nominal_kw = cfg.pv.nominal_kw;
  if (const auto *csv = std::get_if<CsvPv>(&cfg.pv.source)) {
    prof.samples = csv->samples;
    return prof;
  }
  const auto &syn = std::get<SyntheticPv>(cfg.pv.source);
  std::mt19937_64 rng(cfg.seed);
  const double raw_cap = cfg.pv.nominal_kw / (1.0 - cfg.pv.eps_pv);
  const std::size_t n = cfg.steps();
  prof.samples.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * cfg.weights.sampling_s;
    const double z = (t - syn.center_s) / syn.width_s;
    double raw = syn.peak_kw * std::exp(-0.5 * z * z);
    if (syn.noise > 0.0) {
      // 53-bit uniform in [-1, 1), identical on every platform
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
      raw *= 1.0 + syn.noise * u;
    }
    prof.samples.push_back({t, std::clamp(raw, 0.0, raw_cap)});
  }
  return prof;
}

bool set_parameter(ScenarioConfig &cfg, const std::string &name, double value) {
  if (name == "alpha")
    cfg.weights.alpha = value;
  else if (name == "beta")
    cfg.weights.beta = value;
  else if (name == "gamma")
    cfg.weights.gamma = value;
  else if (name == "delta")
    cfg.weights.delta = value;
  else if (name == "e")
    cfg.weights.e = value;
  else if (name == "y0")
    cfg.y0_kwh = value;
  else
    return false;
  return true;
}

ScenarioConfig canonical_scenario() {
  ScenarioConfig cfg;
  cfg.name = "med16";
  cfg.station.p_cs_max_kw = 120.0;
  cfg.station.plugs_kw = {50.0, 50.0, 43.0, 22.0};
  cfg.storage.y_max_kwh = 300.0;
  cfg.storage.p_s_max_kw = 150.0;
  cfg.storage.eps_s = 0.1;
  cfg.storage.y_ref_kwh = 150.0;
  cfg.y0_kwh = 150.0;
  cfg.pv.nominal_kw = 120.0;
  cfg.pv.eps_pv = 0.15;
  cfg.pv.source = SyntheticPv{120.0, 3600.0, 2400.0, 0.0};
  cfg.fleet = {
      {"ev22", 0.0, 22.0, 4.0, 40.0, 4.0, std::nullopt},
      {"ev43", 900.0, 43.0, 6.0, 60.0, 6.0, std::nullopt},
      {"ev50a", 1500.0, 50.0, 10.0, 70.0, 8.0, 2820.0},
      {"ev50b", 2700.0, 50.0, 12.0, 50.0, 8.0, std::nullopt},
  };
  cfg.weights = {10.0, 5e6, 3e7, 10.0, 3.0, 60.0};
  cfg.mode = ControlMode::Standalone;
  cfg.horizon_s = 7200.0;
  return cfg;
}

} // namespace fcs
