/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "flexsig/flexsig.h"

#include <cstring>
#include <mutex>
#include <string>

#include "flexsig/app.hpp"
#include "flexsig/error.hpp"

struct fxs_config {
  flexsig::ScenarioConfig config;
};

struct fxs_run {
  flexsig::ScenarioRun run;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mutex;
fxs_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

flexsig::LogFn logger() {
  std::lock_guard lock(g_log_mutex);
  if (!g_log_fn) return {};
  fxs_log_fn fn = g_log_fn;
  void* user = g_log_user;
  return [fn, user](const std::string& msg) { fn(msg.c_str(), user); };
}

fxs_status fail(fxs_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
fxs_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return FXS_OK;
  } catch (const flexsig::ConfigError& e) {
    return fail(FXS_ERR_CONFIG, e.what());
  } catch (const flexsig::ParseError& e) {
    return fail(FXS_ERR_CONFIG, e.what());
  } catch (const flexsig::VerifyError& e) {
    return fail(FXS_ERR_VERIFY, e.what());
  } catch (const std::exception& e) {
    return fail(FXS_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(FXS_ERR_RUNTIME, "unknown error");
  }
}

fxs_status copy_out(const std::string& s, char* buf, size_t len, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf || len == 0) return needed ? FXS_OK : fail(FXS_ERR_ARGUMENT, "null output buffer");
  const size_t n = std::min(len - 1, s.size());
  std::memcpy(buf, s.data(), n);
  buf[n] = '\0';
  if (n < s.size()) return fail(FXS_ERR_ARGUMENT, "output buffer too small");
  return FXS_OK;
}

}  // namespace

extern "C" {

const char* fxs_last_error(void) { return g_last_error.c_str(); }

const char* fxs_version(void) { return "0.1.0"; }

void fxs_set_log(fxs_log_fn fn, void* user) {
  std::lock_guard lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

fxs_status fxs_config_default(fxs_config** out) {
  if (!out) return fail(FXS_ERR_ARGUMENT, "null output handle");
  return guarded([&] { *out = new fxs_config{}; });
}

fxs_status fxs_config_load(const char* path, fxs_config** out) {
  if (!path || !out) return fail(FXS_ERR_ARGUMENT, "null argument");
  return guarded([&] { *out = new fxs_config{flexsig::load_config(path)}; });
}

fxs_status fxs_config_parse(const char* json_text, fxs_config** out) {
  if (!json_text || !out) return fail(FXS_ERR_ARGUMENT, "null argument");
  return guarded([&] { *out = new fxs_config{flexsig::parse_config(json_text)}; });
}

void fxs_config_free(fxs_config* config) { delete config; }

fxs_status fxs_config_set_output_dir(fxs_config* config, const char* dir) {
  if (!config || !dir) return fail(FXS_ERR_ARGUMENT, "null argument");
  return guarded([&] { config->config.output_dir = dir; });
}

fxs_status fxs_config_set_mode(fxs_config* config, const char* mode) {
  if (!config || !mode) return fail(FXS_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    flexsig::ScenarioConfig c = config->config;
    c.mode.kind = flexsig::parse_mode(mode);
    c.validate();
    config->config = std::move(c);
  });
}

fxs_status fxs_config_override_seed(fxs_config* config, const char* assignment) {
  if (!config || !assignment) return fail(FXS_ERR_ARGUMENT, "null argument");
  return guarded([&] { flexsig::apply_seed_override(config->config, assignment); });
}

fxs_status fxs_config_to_json(const fxs_config* config, char* buf, size_t len, size_t* needed) {
  if (!config) return fail(FXS_ERR_ARGUMENT, "null config");
  std::string s;
  const fxs_status st = guarded([&] { s = flexsig::config_to_json(config->config); });
  return st == FXS_OK ? copy_out(s, buf, len, needed) : st;
}

fxs_status fxs_config_fingerprint(const fxs_config* config, char* buf, size_t len) {
  if (!config) return fail(FXS_ERR_ARGUMENT, "null config");
  return copy_out(flexsig::config_fingerprint(config->config), buf, len, nullptr);
}

fxs_status fxs_generate(const fxs_config* config, int* n_households, int* n_pv_battery, int* n_participating) {
  if (!config) return fail(FXS_ERR_ARGUMENT, "null config");
  return guarded([&] {
    const auto r = flexsig::cmd_generate(config->config);
    if (n_households) *n_households = r.n_households;
    if (n_pv_battery) *n_pv_battery = r.n_pv_battery;
    if (n_participating) *n_participating = r.n_participating;
  });
}

fxs_status fxs_train(const fxs_config* config, double* final_loss) {
  if (!config) return fail(FXS_ERR_ARGUMENT, "null config");
  return guarded([&] {
    const auto params = flexsig::cmd_train(config->config, logger());
    if (final_loss) *final_loss = params.loss_trace.empty() ? 0.0 : params.loss_trace.back();
  });
}

fxs_status fxs_simulate(const fxs_config* config, fxs_run** out) {
  if (!config) return fail(FXS_ERR_ARGUMENT, "null config");
  return guarded([&] {
    auto run = flexsig::cmd_simulate(config->config, logger());
    if (out) *out = new fxs_run{std::move(run)};
  });
}

fxs_status fxs_sweep(const fxs_config* config, const char* axis, const double* values, size_t n_values) {
  if (!config || !axis) return fail(FXS_ERR_ARGUMENT, "null argument");
  if (n_values > 0 && !values) return fail(FXS_ERR_ARGUMENT, "null values with nonzero count");
  return guarded([&] {
    std::vector<double> v(values, values + n_values);
    flexsig::cmd_sweep(config->config, flexsig::parse_sweep_axis(axis), std::move(v), logger());
  });
}

fxs_status fxs_verify(const char* run_dir, double* max_discrepancy) {
  if (!run_dir) return fail(FXS_ERR_ARGUMENT, "null run directory");
  if (max_discrepancy) *max_discrepancy = 0.0;
  return guarded([&] {
    try {
      const double d = flexsig::cmd_verify(run_dir);
      if (max_discrepancy) *max_discrepancy = d;
    } catch (const flexsig::VerifyError& e) {
      if (max_discrepancy) *max_discrepancy = e.discrepancy();
      throw;
    }
  });
}

void fxs_run_free(fxs_run* run) { delete run; }

size_t fxs_run_days(const fxs_run* run) { return run ? run->run.trace.days.size() : 0; }

size_t fxs_run_slots(const fxs_run* run) {
  if (!run || run->run.trace.days.empty()) return 0;
  return static_cast<size_t>(run->run.trace.days.front().aggregate_demand_kw.size());
}

fxs_status fxs_run_demand(const fxs_run* run, size_t day, int benchmark, double* out, size_t len) {
  if (!run || !out) return fail(FXS_ERR_ARGUMENT, "null argument");
  const auto& days = run->run.trace.days;
  if (day >= days.size()) return fail(FXS_ERR_ARGUMENT, "day out of range");
  const flexsig::Vec& v = benchmark ? days[day].benchmark_demand_kw : days[day].aggregate_demand_kw;
  if (len < static_cast<size_t>(v.size())) return fail(FXS_ERR_ARGUMENT, "output buffer too small");
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i];
  g_last_error.clear();
  return FXS_OK;
}

fxs_status fxs_run_summary(const fxs_run* run, const char* field, double* value) {
  if (!run || !field || !value) return fail(FXS_ERR_ARGUMENT, "null argument");
  const flexsig::WindowSummary& s = run->run.summary;
  const std::string f = field;
  if (f == "days") *value = s.days;
  else if (f == "mean_pds_pct") *value = s.mean_pds_pct;
  else if (f == "frac_days_positive_pds") *value = s.frac_days_positive_pds;
  else if (f == "mps_pct") *value = s.mps_pct;
  else if (f == "amps_pct") *value = s.amps_pct;
  else if (f == "variation_reduction_pct") *value = s.variation_reduction_pct;
  else if (f == "energy_reduction_pct") *value = s.energy_reduction_pct;
  else if (f == "mean_load_factor") *value = s.mean_load_factor;
  else if (f == "mean_load_factor_benchmark") *value = s.mean_load_factor_benchmark;
  else if (f == "mean_peak_kw") *value = s.mean_peak_kw;
  else if (f == "mean_peak_kw_benchmark") *value = s.mean_peak_kw_benchmark;
  else if (f == "max_peak_kw") *value = s.max_peak_kw;
  else if (f == "convergence_day") *value = flexsig::convergence_day(run->run.trace);
  else return fail(FXS_ERR_ARGUMENT, "unknown summary field '" + f + "'");
  g_last_error.clear();
  return FXS_OK;
}

}  // extern "C"
