/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flexsig/flexsig.h"

namespace {

struct ConfigDeleter {
  void operator()(fxs_config* c) const { fxs_config_free(c); }
};
using ConfigPtr = std::unique_ptr<fxs_config, ConfigDeleter>;

struct RunDeleter {
  void operator()(fxs_run* r) const { fxs_run_free(r); }
};
using RunPtr = std::unique_ptr<fxs_run, RunDeleter>;

int report(fxs_status s, const char* what) {
  if (s != FXS_OK) std::fprintf(stderr, "flexsig %s: %s\n", what, fxs_last_error());
  return static_cast<int>(s);
}

void log_line(const char* msg, void*) { std::fprintf(stderr, "[flexsig] %s\n", msg); }

struct Common {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> seed_overrides;
  std::string mode;
};

void add_common(CLI::App* cmd, Common& c, bool with_mode) {
  cmd->add_option("--config", c.config_path, "scenario JSON (defaults when omitted)");
  cmd->add_option("--out", c.out_dir, "output directory (overrides output_dir)");
  cmd->add_option("--seed-override", c.seed_overrides, "name=int, repeatable")->take_all();
  if (with_mode) cmd->add_option("--mode", c.mode, "simulation mode (overrides mode.kind)");
}

// Builds the config from flags; returns a status and sets `out`.
fxs_status load(const Common& c, ConfigPtr& out) {
  fxs_config* raw = nullptr;
  fxs_status s = c.config_path.empty() ? fxs_config_default(&raw) : fxs_config_load(c.config_path.c_str(), &raw);
  if (s != FXS_OK) return s;
  out.reset(raw);
  if (!c.out_dir.empty() && (s = fxs_config_set_output_dir(raw, c.out_dir.c_str())) != FXS_OK) return s;
  for (const auto& a : c.seed_overrides) {
    if ((s = fxs_config_override_seed(raw, a.c_str())) != FXS_OK) return s;
  }
  if (!c.mode.empty() && (s = fxs_config_set_mode(raw, c.mode.c_str())) != FXS_OK) return s;
  return FXS_OK;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string tok = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t used = 0;
    out.push_back(std::stod(tok, &used));
    if (used != tok.size()) throw std::invalid_argument(tok);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flexsig: closed-loop demand flexibility simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(fxs_version()));
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress messages");

  Common gen_opts, train_opts, sim_opts, sweep_opts;
  auto* gen = app.add_subcommand("generate", "write the population manifest and weather CSVs");
  add_common(gen, gen_opts, false);
  auto* train = app.add_subcommand("train", "train the context classifier and write a checkpoint");
  add_common(train, train_opts, false);
  auto* sim = app.add_subcommand("simulate", "run the benchmark and the configured mode");
  add_common(sim, sim_opts, true);
  auto* sweep = app.add_subcommand("sweep", "replay the scenario along one axis");
  add_common(sweep, sweep_opts, true);
  std::string axis, values_text;
  sweep->add_option("--axis", axis, "participation | elasticity_scale | penetration | archetype | scale_factor | hvac_only")
      ->required();
  sweep->add_option("--values", values_text, "comma-separated axis values (axis defaults when omitted)");
  auto* verify = app.add_subcommand("verify", "recompute summaries of a simulate output directory");
  std::string verify_dir;
  verify->add_option("run_dir", verify_dir, "directory written by simulate");
  verify->add_option("--out", verify_dir, "same as run_dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(FXS_ERR_CONFIG);
  }
  fxs_set_log(quiet ? nullptr : log_line, nullptr);

  ConfigPtr cfg;
  if (gen->parsed()) {
    if (const auto s = load(gen_opts, cfg); s != FXS_OK) return report(s, "generate");
    int n = 0, pv = 0, part = 0;
    if (const auto s = fxs_generate(cfg.get(), &n, &pv, &part); s != FXS_OK) return report(s, "generate");
    std::printf("households %d, pv+battery %d, participating %d\n", n, pv, part);
    return 0;
  }
  if (train->parsed()) {
    if (const auto s = load(train_opts, cfg); s != FXS_OK) return report(s, "train");
    double loss = 0.0;
    if (const auto s = fxs_train(cfg.get(), &loss); s != FXS_OK) return report(s, "train");
    std::printf("final loss %.6g\n", loss);
    return 0;
  }
  if (sim->parsed()) {
    if (const auto s = load(sim_opts, cfg); s != FXS_OK) return report(s, "simulate");
    fxs_run* raw = nullptr;
    if (const auto s = fxs_simulate(cfg.get(), &raw); s != FXS_OK) return report(s, "simulate");
    RunPtr run(raw);
    double days = 0, pds = 0, var = 0, energy = 0;
    fxs_run_summary(run.get(), "days", &days);
    fxs_run_summary(run.get(), "mean_pds_pct", &pds);
    fxs_run_summary(run.get(), "variation_reduction_pct", &var);
    fxs_run_summary(run.get(), "energy_reduction_pct", &energy);
    std::printf("days %.0f, mean PDS %.2f%%, variation reduction %.2f%%, energy reduction %.2f%%\n", days, pds, var,
                energy);
    return 0;
  }
  if (sweep->parsed()) {
    if (const auto s = load(sweep_opts, cfg); s != FXS_OK) return report(s, "sweep");
    std::vector<double> values;
    if (!values_text.empty()) {
      try {
        values = parse_values(values_text);
      } catch (const std::exception&) {
        std::fprintf(stderr, "flexsig sweep: --values: expected comma-separated numbers\n");
        return static_cast<int>(FXS_ERR_CONFIG);
      }
    }
    const auto s = fxs_sweep(cfg.get(), axis.c_str(), values.empty() ? nullptr : values.data(), values.size());
    if (s != FXS_OK) return report(s, "sweep");
    std::printf("wrote sweep_%s.csv\n", axis.c_str());
    return 0;
  }
  if (verify->parsed()) {
    if (verify_dir.empty()) verify_dir = "out";
    double worst = 0.0;
    const auto s = fxs_verify(verify_dir.c_str(), &worst);
    if (s != FXS_OK) return report(s, "verify");
    std::printf("verified %s: max discrepancy %.3g\n", verify_dir.c_str(), worst);
    return 0;
  }
  return static_cast<int>(FXS_ERR_CONFIG);
}
