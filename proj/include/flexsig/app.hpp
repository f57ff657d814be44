/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flexsig/config.hpp"
#include "flexsig/metrics.hpp"
#include "flexsig/simulation.hpp"

namespace flexsig {

/// Progress sink for long commands; the default discards messages.
using LogFn = std::function<void(const std::string&)>;

struct ScenarioInputs {
  std::vector<Household> population;  ///< participation already assigned
  std::vector<WeatherDay> realized;
  std::vector<WeatherDay> forecast;
};

ScenarioInputs build_inputs(const ScenarioConfig& config);

/// Weather the classifier is trained on: the history CSV when configured,
/// otherwise synthetic days of the configured archetype.
std::vector<WeatherDay> training_history(const ScenarioConfig& config);

/// Loads the configured checkpoint, or trains in-process when none is set.
ClassifierParams obtain_classifier(const ScenarioConfig& config, const LogFn& log = {});

SimulationSetup make_setup(const ScenarioConfig& config, const ScenarioInputs& inputs, ModeKind kind,
                           const std::optional<ClassifierParams>& classifier);

struct ScenarioRun {
  SimulationTrace trace;      ///< days carry benchmark_demand_kw
  SimulationTrace benchmark;
  WindowSummary summary;
};

/// Runs the benchmark and the configured mode over the same inputs.
/// `benchmark` may be supplied to skip the benchmark run.
ScenarioRun run_scenario(const ScenarioConfig& config, const ScenarioInputs& inputs,
                         const std::optional<ClassifierParams>& classifier,
                         const SimulationTrace* benchmark = nullptr, const LogFn& log = {});

// Persistence. Every file carries the config fingerprint.

void write_trace_jsonl(const std::filesystem::path& path, const SimulationTrace& trace);
SimulationTrace read_trace_jsonl(const std::filesystem::path& path);

std::vector<DailyMetrics> trace_daily_metrics(const SimulationTrace& trace, double slot_hours, double epsilon);
WindowSummary trace_summary(const SimulationTrace& trace);

// Commands. Outputs land in config.output_dir.

struct GenerateResult {
  int n_households = 0;
  int n_pv_battery = 0;
  int n_participating = 0;
};

GenerateResult cmd_generate(const ScenarioConfig& config);

/// Trains the classifier, writes the checkpoint (config.checkpoint_path, or
/// checkpoint.json in the output directory) and loss_trace.csv.
ClassifierParams cmd_train(const ScenarioConfig& config, const LogFn& log = {});

/// Writes manifest.json, trace.jsonl, metrics.csv, summary.json and per-day
/// plot series under plots/.
ScenarioRun cmd_simulate(const ScenarioConfig& config, const LogFn& log = {});

enum class SweepAxis { participation, elasticity_scale, penetration, archetype, scale_factor, hvac_only };

SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);
std::vector<double> default_sweep_values(SweepAxis axis);

struct SweepRow {
  std::string label;
  double value = 0.0;
  WindowSummary summary;
  std::string fingerprint;  ///< of the varied configuration
};

/// Replays the scenario along one axis and writes sweep_<axis>.csv. The
/// penetration axis is measured against the configured (nominal) case; every
/// other axis against its own benchmark.
std::vector<SweepRow> cmd_sweep(const ScenarioConfig& config, SweepAxis axis, std::vector<double> values = {},
                                const LogFn& log = {});

inline constexpr double kVerifyTol = 1e-9;

/// Recomputes every summary metric of a simulate output directory from its
/// trace. Returns the largest discrepancy; throws VerifyError above kVerifyTol
/// or when files disagree on the fingerprint.
double cmd_verify(const std::filesystem::path& run_dir);

}  // namespace flexsig
