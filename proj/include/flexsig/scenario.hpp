/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flexsig/devices.hpp"

namespace flexsig {

struct TimeGrid {
  int slots_per_day = 24;
  double slot_duration_hours = 1.0;
  int horizon_slots = 24;

  void validate() const;
  /// Clock hour (0..24) at the start of slot `t` of a day.
  double hour_of(int t) const { return (t % slots_per_day) * slot_duration_hours; }
};

struct WeatherDay {
  int date_index = 0;
  Vec temperature_f;
  Vec irradiance_w_m2;
  bool is_forecast = false;

  void validate(const TimeGrid& grid) const;
};

// Averages around which households are drawn. Jitter applies multiplicatively
// to magnitudes (ratings, thermal coefficients, elasticities, load profile);
// comfort setpoints and SOC fractions are held at their averages.
struct HvacAverages {
  double p_max = 3.0;
  double t_prefer = 75.0;
  double t_lower = 72.0;
  double t_upper = 78.0;
  double zeta1 = 0.18;
  double zeta2 = 0.2;
  double power_gain = 1.1;
  double gamma = 0.02;
  int mode_sign = -1;
};

struct FlexLoadAverages {
  /// Hourly preferred consumption over one day (24 values), kW.
  std::vector<double> hourly_profile = {0.55, 0.50, 0.48, 0.48, 0.50, 0.60, 0.85, 1.10,
                                        1.00, 0.80, 0.72, 0.70, 0.72, 0.72, 0.75, 0.85,
                                        1.05, 1.35, 1.55, 1.60, 1.45, 1.20, 0.95, 0.70};
  double band_fraction = 0.20;
  double peak_band_fraction = 0.10;
  std::vector<int> peak_hours = {17, 18, 19, 20};
  double gamma = 0.3;
};

struct BatteryAverages {
  double power_rating = 5.0;
  double hours_at_rating = 4.0;
  double soc_init = 0.5;
  double soc_prefer = 0.5;
  double soc_lower = 0.2;
  double soc_upper = 0.8;
  double gamma = 0.5;
};

struct PvAverages {
  double panel_rating_kw = 5.0;
  double irradiance_ref = 1000.0;
  double gamma = 0.2;
};

struct DeviceAverages {
  HvacAverages hvac;
  FlexLoadAverages flex_load;
  BatteryAverages battery;
  PvAverages pv;
};

struct PopulationParams {
  int n_households = 50;
  double pv_battery_penetration = 0.2;
  double jitter_fraction = 0.15;
  DeviceAverages device_averages;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Household {
  int id = 0;
  std::vector<DeviceSpec> devices;
  bool participating = false;
  std::string node_label;

  bool has_pv_battery() const;
};

/// round-half-up of rate * n
int round_count(double rate, int n);

std::vector<Household> generate_population(const PopulationParams& params, const TimeGrid& grid);

std::vector<Household> assign_participation(std::vector<Household> pop, double rate, std::uint64_t seed);

enum class Archetype { denver, los_angeles, phoenix };

Archetype parse_archetype(const std::string& name);
std::string to_string(Archetype a);

/// Climate constants for the synthetic weather generator.
struct ArchetypeParams {
  double annual_mean_f = 50.5;
  double seasonal_amplitude_f = 22.0;
  int warmest_day_of_year = 200;
  double diurnal_amplitude_f = 14.0;
  double peak_hour = 15.0;
  double day_noise_sd_f = 4.0;
  double day_noise_persistence = 0.7;
  double hour_noise_sd_f = 1.0;
  double latitude_deg = 39.7;
  double clear_sky_peak_w_m2 = 1000.0;
  double cloud_mean = 0.25;
  double cloud_sd = 0.2;
};

ArchetypeParams archetype_defaults(Archetype a);

/// Diurnal plus seasonal sinusoids with seeded noise. `first_day_of_year` is
/// 1-based; June 1 is 152.
std::vector<WeatherDay> synthesize_weather(const ArchetypeParams& climate, int first_day_of_year, int n_days,
                                           std::uint64_t seed, const TimeGrid& grid);

inline std::vector<WeatherDay> synthesize_weather(Archetype a, int first_day_of_year, int n_days,
                                                  std::uint64_t seed, const TimeGrid& grid) {
  return synthesize_weather(archetype_defaults(a), first_day_of_year, n_days, seed, grid);
}

/// Forecast = realized + seeded noise (additive on temperature, multiplicative on irradiance).
std::vector<WeatherDay> make_forecast(const std::vector<WeatherDay>& realized, double temp_sd_f,
                                      double irradiance_rel_sd, std::uint64_t seed);

/// CSV with header `day,hour,temp_f,ghi_wm2`, one row per (day, slot).
/// Lines starting with '#' before the header are skipped.
std::vector<WeatherDay> load_weather_csv(const std::filesystem::path& path, const TimeGrid& grid);
void write_weather_csv(const std::filesystem::path& path, const std::vector<WeatherDay>& days,
                       const std::string& comment = {});

}  // namespace flexsig
