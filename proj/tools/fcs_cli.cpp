// fcs: command-line front end over the C library.
//
//   fcs validate [--scenario] <file>
//   fcs simulate --scenario <file> --out <dir> [--mode standalone|grid]
//                [--delta <f>] [--e <f>] [--seed <n>]
//   fcs sweep --scenario <file> --out <dir> --param <name> --values v1,v2,...
//             [--mode standalone|grid] [--delta <f>] [--e <f>] [--seed <n>]
//
// Exit status: 0 success, 1 runtime/config failure, 2 usage error.

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fcs/fcs.h"

namespace {

struct ScenarioDeleter {
  void operator()(fcs_scenario *s) const { fcs_scenario_free(s); }
};
struct ResultDeleter {
  void operator()(fcs_result *r) const { fcs_result_free(r); }
};
using ScenarioPtr = std::unique_ptr<fcs_scenario, ScenarioDeleter>;
using ResultPtr = std::unique_ptr<fcs_result, ResultDeleter>;

struct Overrides {
  std::string mode;
  std::optional<double> delta;
  std::optional<double> e;
  std::optional<unsigned long long> seed;
};

int report(fcs_status st, const std::string &what) {
  std::cerr << "fcs: " << what << ": " << fcs_status_string(st) << "\n" << fcs_last_error() << "\n";
  return 1;
}

ScenarioPtr load(const std::string &path, int &rc) {
  fcs_scenario *raw = nullptr;
  if (fcs_status st = fcs_scenario_load(path.c_str(), &raw); st != FCS_OK) {
    rc = report(st, "cannot load '" + path + "'");
    return nullptr;
  }
  rc = 0;
  return ScenarioPtr(raw);
}

int apply(fcs_scenario *s, const Overrides &o) {
  if (!o.mode.empty()) {
    const fcs_mode m = o.mode == "grid" ? FCS_MODE_GRID : FCS_MODE_STANDALONE;
    if (fcs_status st = fcs_scenario_set_mode(s, m); st != FCS_OK)
      return report(st, "--mode");
  }
  if (o.delta)
    if (fcs_status st = fcs_scenario_set_param(s, "delta", *o.delta); st != FCS_OK)
      return report(st, "--delta");
  if (o.e)
    if (fcs_status st = fcs_scenario_set_param(s, "e", *o.e); st != FCS_OK)
      return report(st, "--e");
  if (o.seed)
    if (fcs_status st = fcs_scenario_set_seed(s, *o.seed); st != FCS_OK)
      return report(st, "--seed");
  return 0;
}

int print_validation(const fcs_scenario *s, const std::string &path) {
  const size_t n = fcs_scenario_validate(s);
  for (size_t i = 0; i < n; ++i)
    std::cerr << path << ": " << fcs_scenario_error(s, i) << "\n";
  return n == 0 ? 0 : 1;
}

void add_overrides(CLI::App *cmd, Overrides &o) {
  cmd->add_option("--mode", o.mode, "Control mode override")
      ->check(CLI::IsMember({"standalone", "grid"}));
  cmd->add_option("--delta", o.delta, "Grid ramp weight override");
  cmd->add_option("--e", o.e, "Priority exponent override");
  cmd->add_option("--seed", o.seed, "Seed for the synthetic PV noise");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Fast-charging station controller simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fcs_version()));

  std::string scenario, out_dir, param, values;
  std::string validate_pos;
  Overrides overrides;

  auto *validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("file", validate_pos, "Scenario file");
  validate->add_option("--scenario", scenario, "Scenario file");

  auto *simulate = app.add_subcommand("simulate", "Run one closed-loop simulation");
  simulate->add_option("--scenario", scenario, "Scenario file")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();
  add_overrides(simulate, overrides);

  auto *sweep = app.add_subcommand("sweep", "Run one simulation per parameter value");
  sweep->add_option("--scenario", scenario, "Scenario file")->required();
  sweep->add_option("--out", out_dir, "Output directory (one subdirectory per value)")->required();
  sweep->add_option("--param", param, "Parameter to vary")
      ->required()
      ->check(CLI::IsMember({"alpha", "beta", "gamma", "delta", "e", "y0"}));
  sweep->add_option("--values", values, "Comma-separated values")->required();
  add_overrides(sweep, overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  int rc = 0;
  if (*validate) {
    const std::string path = !scenario.empty() ? scenario : validate_pos;
    if (path.empty()) {
      std::cerr << validate->help();
      return 2;
    }
    auto s = load(path, rc);
    if (!s)
      return rc;
    if (print_validation(s.get(), path) != 0)
      return 1;
    std::cout << path << ": ok\n";
    return 0;
  }

  auto base = load(scenario, rc);
  if (!base)
    return rc;
  if ((rc = apply(base.get(), overrides)) != 0)
    return rc;

  if (*simulate) {
    if (print_validation(base.get(), scenario) != 0)
      return 1;
    fcs_result *raw = nullptr;
    if (fcs_status st = fcs_simulate(base.get(), &raw); st != FCS_OK)
      return report(st, "simulation failed");
    ResultPtr result(raw);
    if (fcs_status st = fcs_result_write(result.get(), out_dir.c_str()); st != FCS_OK)
      return report(st, "cannot write results");
    std::cout << "wrote " << fcs_result_rows(result.get()) << " rows to " << out_dir << "\n";
    return 0;
  }

  // sweep
  std::vector<std::string> labels;
  std::vector<ScenarioPtr> runs;
  for (const auto &token : CLI::detail::split(values, ',')) {
    const std::string label = CLI::detail::trim_copy(token);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), v);
    if (label.empty() || ec != std::errc() || ptr != label.data() + label.size()) {
      std::cerr << "fcs: --values: '" << label << "' is not a number\n" << sweep->help();
      return 2;
    }
    fcs_scenario *copy = nullptr;
    if (fcs_status st = fcs_scenario_clone(base.get(), &copy); st != FCS_OK)
      return report(st, "clone");
    ScenarioPtr s(copy);
    if (fcs_status st = fcs_scenario_set_param(s.get(), param.c_str(), v); st != FCS_OK)
      return report(st, "--param");
    if (print_validation(s.get(), scenario + " [" + param + "=" + label + "]") != 0)
      return 1;
    labels.push_back(label);
    runs.push_back(std::move(s));
  }

  std::vector<const fcs_scenario *> handles;
  for (const auto &s : runs)
    handles.push_back(s.get());
  std::vector<fcs_result *> raw(runs.size(), nullptr);
  if (fcs_status st = fcs_simulate_batch(handles.data(), handles.size(), raw.data()); st != FCS_OK)
    return report(st, "sweep failed");
  std::vector<ResultPtr> results;
  for (auto *r : raw)
    results.emplace_back(r);

  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto dir = std::filesystem::path(out_dir) / (param + "_" + labels[i]);
    if (fcs_status st = fcs_result_write(results[i].get(), dir.string().c_str()); st != FCS_OK)
      return report(st, "cannot write results");
    std::cout << param << "=" << labels[i] << ": wrote " << fcs_result_rows(results[i].get())
              << " rows to " << dir.string() << "\n";
  }
  return 0;
}
