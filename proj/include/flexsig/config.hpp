/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "flexsig/simulation.hpp"

namespace flexsig {

struct Seeds {
  std::uint64_t population = 1;
  std::uint64_t participation = 11;
  std::uint64_t weather = 7;
  std::uint64_t forecast = 13;
  std::uint64_t history = 99;  ///< synthetic training weather
  std::uint64_t learner = 5;
};

enum class WeatherSource { synthetic, csv };

struct WeatherConfig {
  WeatherSource source = WeatherSource::synthetic;
  std::filesystem::path csv_path;
  Archetype archetype = Archetype::denver;
  int first_day_of_year = 152;
  int n_days = 92;
  double forecast_temp_sd_f = 1.0;
  double forecast_irradiance_rel_sd = 0.05;
  // offline training history (synthetic, same archetype, or a CSV)
  std::filesystem::path history_csv_path;
  int history_first_day_of_year = 1;
  int history_n_days = 730;
};

inline SimulationMode default_mode() {
  SimulationMode m;
  m.kind = ModeKind::dynamic_context_agnostic;
  return m;
}

struct ScenarioConfig {
  PopulationParams population;
  double participation_rate = 2.0 / 3.0;
  TimeGrid grid;
  WeatherConfig weather;
  SimulationMode mode = default_mode();
  Hyperparams hyper;
  std::filesystem::path checkpoint_path;  ///< optional; dynamic_clustered trains in-process without it
  double objective_epsilon = 0.9;
  double gamma_scale = 1.0;
  bool hvac_only = false;
  bool no_sell = true;
  double initial_indoor_f = 75.0;
  SolverOptions solver;
  unsigned threads = 0;
  Seeds seeds;
  std::filesystem::path output_dir = "out";

  void validate() const;
};

/// Parses a JSON configuration. Every key is optional; unknown keys and type
/// mismatches raise ConfigError naming the key path (e.g. "population.n_households").
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration, defaults included, in a stable key order.
std::string config_to_json(const ScenarioConfig& config);

/// Hex digest of the resolved configuration without output_dir.
std::string config_fingerprint(const ScenarioConfig& config);

/// Applies "name=value" to one of the named seeds.
void apply_seed_override(ScenarioConfig& config, const std::string& assignment);

}  // namespace flexsig
