/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "flexsig/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "flexsig/error.hpp"

namespace flexsig {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

void say(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json vec_json(const Vec& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec json_vec(const ordered_json& a, const std::string& what) {
  if (!a.is_array()) throw ParseError(0, what + ": expected an array");
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw ParseError(0, what + ": expected numbers");
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  return v;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const ordered_json& j) { open_out(path) << j.dump(2) << '\n'; }

ordered_json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

ordered_json summary_json(const WindowSummary& s) {
  return {{"days", s.days},
          {"mean_pds_pct", s.mean_pds_pct},
          {"frac_days_positive_pds", s.frac_days_positive_pds},
          {"mps_pct", s.mps_pct},
          {"amps_pct", s.amps_pct},
          {"variation_reduction_pct", s.variation_reduction_pct},
          {"energy_reduction_pct", s.energy_reduction_pct},
          {"mean_load_factor", s.mean_load_factor},
          {"mean_load_factor_benchmark", s.mean_load_factor_benchmark},
          {"mean_peak_kw", s.mean_peak_kw},
          {"mean_peak_kw_benchmark", s.mean_peak_kw_benchmark},
          {"max_peak_kw", s.max_peak_kw}};
}

std::vector<std::pair<std::string, double>> summary_fields(const WindowSummary& s) {
  return {{"days", static_cast<double>(s.days)},
          {"mean_pds_pct", s.mean_pds_pct},
          {"frac_days_positive_pds", s.frac_days_positive_pds},
          {"mps_pct", s.mps_pct},
          {"amps_pct", s.amps_pct},
          {"variation_reduction_pct", s.variation_reduction_pct},
          {"energy_reduction_pct", s.energy_reduction_pct},
          {"mean_load_factor", s.mean_load_factor},
          {"mean_load_factor_benchmark", s.mean_load_factor_benchmark},
          {"mean_peak_kw", s.mean_peak_kw},
          {"mean_peak_kw_benchmark", s.mean_peak_kw_benchmark},
          {"max_peak_kw", s.max_peak_kw}};
}

const std::vector<std::string> kMetricColumns = {"pds_pct",      "peak_kw", "delta_max_kw", "load_factor",
                                                 "energy_kwh",   "energy_reduction_pct",   "qv",
                                                 "grid_cost"};

std::vector<double> metric_values(const DailyMetrics& m) {
  return {m.pds_pct, m.peak_kw, m.delta_max_kw, m.load_factor, m.energy_kwh, m.energy_reduction_pct, m.qv, m.grid_cost};
}

ordered_json household_json(const Household& hh) {
  ordered_json devices = ordered_json::array();
  for (const auto& d : hh.devices) {
    ordered_json j;
    j["kind"] = std::string(to_string(kind_of(d)));
    if (const auto* h = std::get_if<HvacSpec>(&d)) {
      j["p_max_kw"] = h->p_max.size() ? h->p_max.maxCoeff() : 0.0;
      j["t_lower"] = h->t_lower.size() ? h->t_lower.minCoeff() : 0.0;
      j["t_upper"] = h->t_upper.size() ? h->t_upper.maxCoeff() : 0.0;
      j["zeta1"] = h->zeta1;
      j["zeta2"] = h->zeta2;
      j["power_gain"] = h->power_gain;
      j["gamma"] = h->gamma;
      j["mode_sign"] = h->mode_sign;
    } else if (const auto* f = std::get_if<FlexLoadSpec>(&d)) {
      j["total_energy_kwh"] = f->total_energy;
      j["gamma"] = f->gamma;
    } else if (const auto* b = std::get_if<BatterySpec>(&d)) {
      j["p_charge_max_kw"] = b->p_charge_max;
      j["p_discharge_max_kw"] = b->p_discharge_max;
      j["capacity_kwh"] = b->capacity_kwh;
      j["soc_init"] = b->soc_init;
      j["soc_lower"] = b->soc_lower;
      j["soc_upper"] = b->soc_upper;
      j["gamma"] = b->gamma;
    } else if (const auto* p = std::get_if<PvSpec>(&d)) {
      j["panel_rating_kw"] = p->panel_rating_kw;
      j["gamma"] = p->gamma;
    }
    devices.push_back(std::move(j));
  }
  return {{"id", hh.id}, {"participating", hh.participating}, {"has_pv_battery", hh.has_pv_battery()},
          {"devices", devices}};
}

void write_plots(const fs::path& dir, const SimulationTrace& trace, const TimeGrid& grid) {
  fs::create_directories(dir);
  const std::string tag = "# fingerprint=" + trace.config_fingerprint + "\n";
  char name[64];
  for (const auto& d : trace.days) {
    std::snprintf(name, sizeof name, "demand_day_%04d.csv", d.date_index);
    auto out = open_out(dir / name);
    out << tag << "slot,hour,aggregate_kw,benchmark_kw\n";
    for (Eigen::Index t = 0; t < d.aggregate_demand_kw.size(); ++t) {
      out << t << ',' << fmt(grid.hour_of(static_cast<int>(t))) << ',' << fmt(d.aggregate_demand_kw[t]) << ','
          << (t < d.benchmark_demand_kw.size() ? fmt(d.benchmark_demand_kw[t]) : std::string()) << '\n';
    }
    if (d.prices.size() == 0) continue;
    std::snprintf(name, sizeof name, "prices_day_%04d.csv", d.date_index);
    auto pout = open_out(dir / name);
    pout << tag << "slot,hours_ahead,price\n";
    for (Eigen::Index t = 0; t < d.prices.size(); ++t)
      pout << t << ',' << fmt(static_cast<double>(t) * grid.slot_duration_hours) << ',' << fmt(d.prices[t]) << '\n';
  }
}

void write_metrics_csv(const fs::path& path, const SimulationTrace& trace, const std::vector<DailyMetrics>& daily) {
  auto out = open_out(path);
  out << "# fingerprint=" << trace.config_fingerprint << '\n';
  out << "date_index";
  for (const auto& c : kMetricColumns) out << ',' << c;
  out << '\n';
  std::vector<double> sums(kMetricColumns.size(), 0.0);
  for (std::size_t i = 0; i < daily.size(); ++i) {
    out << trace.days[i].date_index;
    const auto v = metric_values(daily[i]);
    for (std::size_t c = 0; c < v.size(); ++c) {
      out << ',' << fmt(v[c]);
      sums[c] += v[c];
    }
    out << '\n';
  }
  out << "summary";
  for (double s : sums) out << ',' << fmt(daily.empty() ? 0.0 : s / static_cast<double>(daily.size()));
  out << '\n';
}

struct MetricsCsv {
  std::string fingerprint;
  std::vector<int> dates;
  std::vector<std::vector<double>> rows;
  std::vector<double> summary;
};

MetricsCsv read_metrics_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  MetricsCsv m;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# fingerprint=", 0) == 0) {
      m.fingerprint = line.substr(14);
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    std::vector<double> vals;
    std::string f;
    while (std::getline(ss, f, ',')) {
      char* end = nullptr;
      vals.push_back(std::strtod(f.c_str(), &end));
      if (end == f.c_str()) throw ParseError(lineno, "metrics: malformed number");
    }
    if (vals.size() != kMetricColumns.size()) throw ParseError(lineno, "metrics: wrong column count");
    if (cell == "summary") {
      m.summary = std::move(vals);
    } else {
      m.dates.push_back(std::stoi(cell));
      m.rows.push_back(std::move(vals));
    }
  }
  return m;
}

ScenarioConfig with_mode(ScenarioConfig c, ModeKind kind) {
  c.mode.kind = kind;
  return c;
}

}  // namespace

ScenarioInputs build_inputs(const ScenarioConfig& config) {
  config.validate();
  ScenarioInputs in;
  in.population = assign_participation(generate_population(config.population, config.grid), config.participation_rate,
                                       config.seeds.participation);
  if (config.weather.source == WeatherSource::csv) {
    in.realized = load_weather_csv(config.weather.csv_path, config.grid);
  } else {
    in.realized = synthesize_weather(config.weather.archetype, config.weather.first_day_of_year,
                                     config.weather.n_days, config.seeds.weather, config.grid);
  }
  if (in.realized.empty()) throw ConfigError("weather", "no weather days");
  in.forecast = make_forecast(in.realized, config.weather.forecast_temp_sd_f, config.weather.forecast_irradiance_rel_sd,
                              config.seeds.forecast);
  return in;
}

std::vector<WeatherDay> training_history(const ScenarioConfig& config) {
  if (!config.weather.history_csv_path.empty()) return load_weather_csv(config.weather.history_csv_path, config.grid);
  return synthesize_weather(config.weather.archetype, config.weather.history_first_day_of_year,
                            config.weather.history_n_days, config.seeds.history, config.grid);
}

ClassifierParams obtain_classifier(const ScenarioConfig& config, const LogFn& log) {
  if (!config.checkpoint_path.empty()) {
    say(log, "loading checkpoint " + config.checkpoint_path.string());
    Checkpoint cp = load_checkpoint(config.checkpoint_path);
    if (cp.params.d_in() != 2 * config.grid.slots_per_day)
      throw ConfigError("pricing.checkpoint", "checkpoint context dimension does not match the time grid");
    return std::move(cp.params);
  }
  const auto history = training_history(config);
  say(log, "training classifier on " + std::to_string(history.size()) + " days, " +
               std::to_string(config.hyper.offline_epochs) + " epochs");
  return offline_train(history, config.hyper, config.seeds.learner);
}

SimulationSetup make_setup(const ScenarioConfig& config, const ScenarioInputs& inputs, ModeKind kind,
                           const std::optional<ClassifierParams>& classifier) {
  SimulationSetup s;
  s.population = inputs.population;
  s.grid = config.grid;
  s.realized = inputs.realized;
  s.forecast = inputs.forecast;
  s.mode = config.mode;
  s.mode.kind = kind;
  s.hyper = config.hyper;
  if (kind == ModeKind::dynamic_clustered) s.classifier = classifier;
  s.gamma_scale = config.gamma_scale;
  s.price_scope = config.hvac_only ? PriceScope::hvac_only : PriceScope::all_devices;
  s.no_sell = config.no_sell;
  s.initial_indoor_f = config.initial_indoor_f;
  s.solver = config.solver;
  s.threads = config.threads;
  s.config_fingerprint = config_fingerprint(with_mode(config, kind));
  return s;
}

ScenarioRun run_scenario(const ScenarioConfig& config, const ScenarioInputs& inputs,
                         const std::optional<ClassifierParams>& classifier, const SimulationTrace* benchmark,
                         const LogFn& log) {
  ScenarioRun run;
  if (benchmark) {
    run.benchmark = *benchmark;
  } else {
    say(log, "running benchmark over " + std::to_string(inputs.realized.size()) + " days");
    run.benchmark = run_horizon(make_setup(config, inputs, ModeKind::benchmark, std::nullopt));
    if (!run.benchmark.complete) throw std::runtime_error("benchmark run failed: " + run.benchmark.error);
  }
  if (config.mode.kind == ModeKind::benchmark) {
    run.trace = run.benchmark;
    run.trace.config_fingerprint = config_fingerprint(config);
  } else {
    std::optional<ClassifierParams> cls = classifier;
    if (config.mode.kind == ModeKind::dynamic_clustered && !cls) cls = obtain_classifier(config, log);
    say(log, "running " + to_string(config.mode.kind) + " over " + std::to_string(inputs.realized.size()) + " days");
    run.trace = run_horizon(make_setup(config, inputs, config.mode.kind, cls));
  }
  for (std::size_t i = 0; i < run.trace.days.size() && i < run.benchmark.days.size(); ++i)
    run.trace.days[i].benchmark_demand_kw = run.benchmark.days[i].aggregate_demand_kw;
  run.summary = trace_summary(run.trace);
  return run;
}

void write_trace_jsonl(const fs::path& path, const SimulationTrace& trace) {
  auto out = open_out(path);
  const std::string mode = to_string(trace.mode);
  for (const auto& d : trace.days) {
    ordered_json j;
    j["fingerprint"] = trace.config_fingerprint;
    j["mode"] = mode;
    j["date_index"] = d.date_index;
    j["prices"] = vec_json(d.prices);
    j["aggregate_demand_kw"] = vec_json(d.aggregate_demand_kw);
    j["benchmark_demand_kw"] = vec_json(d.benchmark_demand_kw);
    j["mean_demand_kw"] = vec_json(d.mean_demand_kw);
    j["cluster_weights"] = vec_json(d.cluster_weights);
    j["price_change_rel"] = d.price_change_rel;
    j["negotiation_rounds"] = d.negotiation_rounds;
    j["negotiation_converged"] = d.negotiation_converged;
    j["max_kkt_residual"] = d.max_kkt_residual;
    j["max_iterations"] = d.max_iterations;
    out << j.dump() << '\n';
  }
}

SimulationTrace read_trace_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  SimulationTrace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
      const std::string fp = j.at("fingerprint").get<std::string>();
      if (trace.days.empty()) {
        trace.config_fingerprint = fp;
        trace.mode = parse_mode(j.at("mode").get<std::string>());
      } else if (fp != trace.config_fingerprint) {
        throw VerifyError(0.0, "line " + std::to_string(lineno) + ": fingerprint differs from the first record");
      }
      DayRecord d;
      d.date_index = j.at("date_index").get<int>();
      d.prices = json_vec(j.at("prices"), "prices");
      d.aggregate_demand_kw = json_vec(j.at("aggregate_demand_kw"), "aggregate_demand_kw");
      d.benchmark_demand_kw = json_vec(j.at("benchmark_demand_kw"), "benchmark_demand_kw");
      d.mean_demand_kw = json_vec(j.at("mean_demand_kw"), "mean_demand_kw");
      d.cluster_weights = json_vec(j.at("cluster_weights"), "cluster_weights");
      d.price_change_rel = j.at("price_change_rel").get<double>();
      d.negotiation_rounds = j.at("negotiation_rounds").get<int>();
      d.negotiation_converged = j.at("negotiation_converged").get<bool>();
      d.max_kkt_residual = j.at("max_kkt_residual").get<double>();
      d.max_iterations = j.at("max_iterations").get<int>();
      trace.days.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, std::string("trace: ") + e.what());
    }
  }
  trace.complete = true;
  return trace;
}

std::vector<DailyMetrics> trace_daily_metrics(const SimulationTrace& trace, double slot_hours, double epsilon) {
  std::vector<DailyMetrics> out;
  out.reserve(trace.days.size());
  for (const auto& d : trace.days) {
    if (d.benchmark_demand_kw.size() != d.aggregate_demand_kw.size())
      throw ValidationError("day " + std::to_string(d.date_index) + " lacks a benchmark profile");
    out.push_back(daily_metrics(d.aggregate_demand_kw, d.benchmark_demand_kw, slot_hours, epsilon));
  }
  return out;
}

WindowSummary trace_summary(const SimulationTrace& trace) {
  std::vector<Vec> days, days0;
  for (const auto& d : trace.days) {
    if (d.benchmark_demand_kw.size() != d.aggregate_demand_kw.size()) break;
    days.push_back(d.aggregate_demand_kw);
    days0.push_back(d.benchmark_demand_kw);
  }
  if (days.empty()) return {};
  return summarize_window(days, days0);
}

GenerateResult cmd_generate(const ScenarioConfig& config) {
  const ScenarioInputs in = build_inputs(config);
  fs::create_directories(config.output_dir);
  const std::string fp = config_fingerprint(config);
  GenerateResult r;
  r.n_households = static_cast<int>(in.population.size());
  ordered_json households = ordered_json::array();
  for (const auto& hh : in.population) {
    r.n_pv_battery += hh.has_pv_battery();
    r.n_participating += hh.participating;
    households.push_back(household_json(hh));
  }
  ordered_json j;
  j["format"] = "flexsig-population";
  j["version"] = 1;
  j["fingerprint"] = fp;
  j["n_households"] = r.n_households;
  j["n_pv_battery"] = r.n_pv_battery;
  j["n_participating"] = r.n_participating;
  j["households"] = households;
  write_json(config.output_dir / "population.json", j);
  write_weather_csv(config.output_dir / "weather.csv", in.realized, "fingerprint=" + fp);
  write_weather_csv(config.output_dir / "forecast.csv", in.forecast, "fingerprint=" + fp);
  return r;
}

ClassifierParams cmd_train(const ScenarioConfig& config, const LogFn& log) {
  config.validate();
  const auto history = training_history(config);
  say(log, "training classifier on " + std::to_string(history.size()) + " days, " +
               std::to_string(config.hyper.offline_epochs) + " epochs");
  ClassifierParams params = offline_train(history, config.hyper, config.seeds.learner);
  fs::create_directories(config.output_dir);
  const fs::path ckpt = config.checkpoint_path.empty() ? config.output_dir / "checkpoint.json" : config.checkpoint_path;
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  save_checkpoint(ckpt, params, config.hyper);
  auto out = open_out(config.output_dir / "loss_trace.csv");
  out << "# fingerprint=" << config_fingerprint(config) << '\n' << "epoch,loss\n";
  for (std::size_t i = 0; i < params.loss_trace.size(); ++i) out << i << ',' << fmt(params.loss_trace[i]) << '\n';
  say(log, "wrote " + ckpt.string());
  return params;
}

ScenarioRun cmd_simulate(const ScenarioConfig& config, const LogFn& log) {
  const ScenarioInputs in = build_inputs(config);
  ScenarioRun run = run_scenario(config, in, std::nullopt, nullptr, log);
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  const SimulationTrace& trace = run.trace;
  write_trace_jsonl(dir / "trace.jsonl", trace);
  const auto daily = trace_daily_metrics(trace, config.grid.slot_duration_hours, config.objective_epsilon);
  write_metrics_csv(dir / "metrics.csv", trace, daily);
  ordered_json summary;
  summary["fingerprint"] = trace.config_fingerprint;
  summary["mode"] = to_string(trace.mode);
  summary["window"] = summary_json(run.summary);
  summary["convergence_day"] = convergence_day(trace);
  write_json(dir / "summary.json", summary);
  write_plots(dir / "plots", trace, config.grid);
  std::vector<std::string> files = {"trace.jsonl", "metrics.csv", "summary.json", "plots/"};
  if (trace.final_kappa) {
    ordered_json k;
    k["fingerprint"] = trace.config_fingerprint;
    ordered_json cols = ordered_json::array();
    for (Eigen::Index c = 0; c < trace.final_kappa->cols(); ++c) cols.push_back(vec_json(trace.final_kappa->col(c)));
    k["kappa_columns"] = cols;
    write_json(dir / "learner_kappa.json", k);
    files.push_back("learner_kappa.json");
  }
  ordered_json manifest;
  manifest["format"] = "flexsig-run";
  manifest["version"] = 1;
  manifest["fingerprint"] = trace.config_fingerprint;
  manifest["mode"] = to_string(trace.mode);
  manifest["complete"] = trace.complete;
  manifest["error"] = trace.error;
  manifest["days"] = trace.days.size();
  manifest["files"] = files;
  manifest["config"] = ordered_json::parse(config_to_json(config));
  write_json(dir / "manifest.json", manifest);
  if (!trace.complete) throw std::runtime_error(trace.error);
  return run;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "participation") return SweepAxis::participation;
  if (name == "elasticity_scale") return SweepAxis::elasticity_scale;
  if (name == "penetration") return SweepAxis::penetration;
  if (name == "archetype") return SweepAxis::archetype;
  if (name == "scale_factor") return SweepAxis::scale_factor;
  if (name == "hvac_only") return SweepAxis::hvac_only;
  throw ConfigError("--axis", "unknown sweep axis '" + name + "'");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::participation: return "participation";
    case SweepAxis::elasticity_scale: return "elasticity_scale";
    case SweepAxis::penetration: return "penetration";
    case SweepAxis::archetype: return "archetype";
    case SweepAxis::scale_factor: return "scale_factor";
    case SweepAxis::hvac_only: return "hvac_only";
  }
  return "?";
}

std::vector<double> default_sweep_values(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::participation: return {1.0 / 3.0, 2.0 / 3.0, 1.0};
    case SweepAxis::elasticity_scale: return {1e4, 1e2, 1.0, 1e-2, 1e-4};
    case SweepAxis::penetration: return {0.2, 0.6};
    case SweepAxis::archetype: return {0.0, 1.0, 2.0};
    case SweepAxis::scale_factor: return {1.0, 10.0};
    case SweepAxis::hvac_only: return {0.0, 1.0};
  }
  return {};
}

std::vector<SweepRow> cmd_sweep(const ScenarioConfig& config, SweepAxis axis, std::vector<double> values,
                                const LogFn& log) {
  config.validate();
  if (values.empty()) values = default_sweep_values(axis);
  if (axis == SweepAxis::archetype && config.weather.source != WeatherSource::synthetic)
    throw ConfigError("weather.source", "the archetype sweep needs synthetic weather");

  // Points on these axes share population and weather, so one benchmark serves all.
  const bool shared_benchmark = axis == SweepAxis::participation || axis == SweepAxis::elasticity_scale ||
                                axis == SweepAxis::hvac_only;
  std::optional<SimulationTrace> benchmark;
  std::optional<ClassifierParams> classifier;
  std::optional<ScenarioRun> nominal;
  if (axis == SweepAxis::penetration) {
    say(log, "running the nominal case as the penetration baseline");
    nominal = run_scenario(config, build_inputs(config), std::nullopt, nullptr, log);
    if (!nominal->trace.complete) throw std::runtime_error(nominal->trace.error);
  }

  std::vector<SweepRow> rows;
  for (double v : values) {
    ScenarioConfig c = config;
    SweepRow row;
    row.value = v;
    switch (axis) {
      case SweepAxis::participation:
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("--values", "participation rates must lie in [0, 1]");
        c.participation_rate = v;
        break;
      case SweepAxis::elasticity_scale:
        if (!(v > 0.0)) throw ConfigError("--values", "elasticity scales must be positive");
        c.gamma_scale = v;
        break;
      case SweepAxis::penetration:
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("--values", "penetrations must lie in [0, 1]");
        c.population.pv_battery_penetration = v;
        break;
      case SweepAxis::archetype: {
        const int idx = static_cast<int>(std::lround(v));
        if (idx < 0 || idx > 2 || std::abs(v - idx) > 1e-12)
          throw ConfigError("--values", "archetypes are indexed 0 (denver), 1 (los_angeles), 2 (phoenix)");
        c.weather.archetype = static_cast<Archetype>(idx);
        row.label = to_string(c.weather.archetype);
        break;
      }
      case SweepAxis::scale_factor:
        if (!(v > 0.0)) throw ConfigError("--values", "scale factors must be positive");
        c.population.n_households = static_cast<int>(std::lround(config.population.n_households * v));
        break;
      case SweepAxis::hvac_only:
        c.hvac_only = v != 0.0;
        break;
    }
    if (row.label.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", v);
      row.label = buf;
    }
    row.fingerprint = config_fingerprint(c);
    say(log, to_string(axis) + " = " + row.label);
    const ScenarioInputs in = build_inputs(c);
    if (c.mode.kind == ModeKind::dynamic_clustered && (!classifier || axis == SweepAxis::archetype))
      classifier = obtain_classifier(c, log);
    ScenarioRun run = run_scenario(c, in, classifier, benchmark ? &*benchmark : nullptr, log);
    if (!run.trace.complete) throw std::runtime_error(to_string(axis) + " = " + row.label + ": " + run.trace.error);
    if (shared_benchmark && !benchmark) benchmark = run.benchmark;
    if (nominal) {
      std::vector<Vec> d, d0;
      for (std::size_t i = 0; i < run.trace.days.size() && i < nominal->trace.days.size(); ++i) {
        d.push_back(run.trace.days[i].aggregate_demand_kw);
        d0.push_back(nominal->trace.days[i].aggregate_demand_kw);
      }
      row.summary = summarize_window(d, d0);
    } else {
      row.summary = run.summary;
    }
    rows.push_back(std::move(row));
  }

  fs::create_directories(config.output_dir);
  auto out = open_out(config.output_dir / ("sweep_" + to_string(axis) + ".csv"));
  out << "# fingerprint=" << config_fingerprint(config) << '\n';
  out << "# baseline=" << (axis == SweepAxis::penetration ? "nominal" : "benchmark") << '\n';
  out << "axis,value,label";
  for (const auto& [k, v] : summary_fields(WindowSummary{})) out << ',' << k;
  out << ",point_fingerprint\n";
  for (const auto& r : rows) {
    out << to_string(axis) << ',' << fmt(r.value) << ',' << r.label;
    for (const auto& [k, v] : summary_fields(r.summary)) out << ',' << fmt(v);
    out << ',' << r.fingerprint << '\n';
  }
  return rows;
}

double cmd_verify(const fs::path& dir) {
  const ordered_json manifest = read_json(dir / "manifest.json");
  if (manifest.value("format", "") != "flexsig-run") throw ParseError(0, "manifest: not a flexsig run directory");
  const std::string fp = manifest.at("fingerprint").get<std::string>();
  ScenarioConfig config;
  try {
    config = parse_config(manifest.at("config").dump());
  } catch (const ConfigError& e) {
    throw ParseError(0, std::string("manifest config: ") + e.what());
  }

  const SimulationTrace trace = read_trace_jsonl(dir / "trace.jsonl");
  if (!trace.days.empty() && trace.config_fingerprint != fp)
    throw VerifyError(0.0, "trace fingerprint " + trace.config_fingerprint + " differs from manifest " + fp);
  if (trace.days.size() != manifest.at("days").get<std::size_t>())
    throw VerifyError(0.0, "trace holds " + std::to_string(trace.days.size()) + " days, manifest says " +
                               std::to_string(manifest.at("days").get<std::size_t>()));
  for (std::size_t i = 1; i < trace.days.size(); ++i) {
    if (trace.days[i].date_index != trace.days[i - 1].date_index + 1)
      throw VerifyError(0.0, "trace days are not consecutive at record " + std::to_string(i + 1));
  }

  double worst = 0.0;
  std::string worst_what = "none";
  auto compare = [&](double emitted, double recomputed, const std::string& what) {
    const double diff = std::abs(emitted - recomputed) / std::max(1.0, std::abs(recomputed));
    if (!(diff <= worst)) {
      worst = std::isnan(diff) ? std::numeric_limits<double>::infinity() : diff;
      worst_what = what;
    }
  };

  const auto daily = trace_daily_metrics(trace, config.grid.slot_duration_hours, config.objective_epsilon);
  const MetricsCsv csv = read_metrics_csv(dir / "metrics.csv");
  if (csv.fingerprint != fp) throw VerifyError(0.0, "metrics.csv fingerprint differs from manifest");
  if (csv.rows.size() != daily.size())
    throw VerifyError(0.0, "metrics.csv holds " + std::to_string(csv.rows.size()) + " day rows, trace " +
                               std::to_string(daily.size()));
  if (csv.summary.size() != kMetricColumns.size()) throw VerifyError(0.0, "metrics.csv lacks its summary row");
  std::vector<double> sums(kMetricColumns.size(), 0.0);
  for (std::size_t i = 0; i < daily.size(); ++i) {
    if (csv.dates[i] != trace.days[i].date_index) throw VerifyError(0.0, "metrics.csv dates differ from trace");
    const auto v = metric_values(daily[i]);
    for (std::size_t c = 0; c < v.size(); ++c) {
      compare(csv.rows[i][c], v[c], "metrics.csv day " + std::to_string(csv.dates[i]) + " " + kMetricColumns[c]);
      sums[c] += v[c];
    }
  }
  for (std::size_t c = 0; c < sums.size(); ++c) {
    const double mean = daily.empty() ? 0.0 : sums[c] / static_cast<double>(daily.size());
    compare(csv.summary[c], mean, "metrics.csv summary " + kMetricColumns[c]);
  }

  const ordered_json summary = read_json(dir / "summary.json");
  if (summary.at("fingerprint").get<std::string>() != fp)
    throw VerifyError(0.0, "summary.json fingerprint differs from manifest");
  const WindowSummary recomputed = trace_summary(trace);
  const ordered_json& window = summary.at("window");
  for (const auto& [k, v] : summary_fields(recomputed)) compare(window.at(k).get<double>(), v, "summary.json " + k);
  compare(summary.at("convergence_day").get<double>(), convergence_day(trace), "summary.json convergence_day");

  if (worst > kVerifyTol) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", worst);
    throw VerifyError(worst, "largest discrepancy " + std::string(buf) + " at " + worst_what);
  }
  return worst;
}

}  // namespace flexsig
