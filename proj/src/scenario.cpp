/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "flexsig/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "flexsig/error.hpp"
#include "flexsig/rng.hpp"

namespace flexsig {

void TimeGrid::validate() const {
  if (slots_per_day <= 0) throw ConfigError("grid.slots_per_day", "must be positive");
  if (!(slot_duration_hours > 0.0)) throw ConfigError("grid.slot_duration_hours", "must be positive");
  if (std::abs(slots_per_day * slot_duration_hours - 24.0) > 1e-9)
    throw ConfigError("grid", "slots_per_day * slot_duration_hours must equal 24");
  if (horizon_slots <= 0 || horizon_slots % slots_per_day != 0)
    throw ConfigError("grid.horizon_slots", "must be a positive multiple of slots_per_day");
}

void WeatherDay::validate(const TimeGrid& grid) const {
  const auto t = static_cast<Eigen::Index>(grid.slots_per_day);
  if (temperature_f.size() != t || irradiance_w_m2.size() != t)
    throw ValidationError("weather day " + std::to_string(date_index) + ": expected " + std::to_string(t) +
                          " slots");
  if (!temperature_f.allFinite() || !irradiance_w_m2.allFinite())
    throw ValidationError("weather day " + std::to_string(date_index) + ": non-finite value");
  if ((irradiance_w_m2.array() < 0.0).any())
    throw ValidationError("weather day " + std::to_string(date_index) + ": negative irradiance");
}

void PopulationParams::validate() const {
  if (n_households < 0) throw ConfigError("population.n_households", "must be nonnegative");
  if (!(pv_battery_penetration >= 0.0 && pv_battery_penetration <= 1.0))
    throw ConfigError("population.pv_battery_penetration", "must lie in [0, 1]");
  if (!(jitter_fraction >= 0.0 && jitter_fraction < 1.0))
    throw ConfigError("population.jitter_fraction", "must lie in [0, 1)");
  const auto& fl = device_averages.flex_load;
  if (fl.hourly_profile.size() != 24)
    throw ConfigError("population.device_averages.flex_load.hourly_profile", "needs 24 hourly values");
  if (!(fl.band_fraction >= 0.0 && fl.band_fraction < 1.0 && fl.peak_band_fraction >= 0.0 &&
        fl.peak_band_fraction < 1.0))
    throw ConfigError("population.device_averages.flex_load", "band fractions must lie in [0, 1)");
}

bool Household::has_pv_battery() const {
  return std::any_of(devices.begin(), devices.end(),
                     [](const DeviceSpec& d) { return kind_of(d) == DeviceKind::pv; });
}

int round_count(double rate, int n) {
  return static_cast<int>(std::floor(rate * n + 0.5 + 1e-9));
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Fisher-Yates with the library-independent index draw
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  return idx;
}

}  // namespace

std::vector<Household> generate_population(const PopulationParams& params, const TimeGrid& grid) {
  params.validate();
  grid.validate();
  const int n = params.n_households;
  const Eigen::Index h = grid.horizon_slots;
  const auto& avg = params.device_averages;
  const double j = params.jitter_fraction;

  Rng pick(mix_seed(params.seed, 1));
  std::vector<bool> with_der(static_cast<std::size_t>(n), false);
  const auto order = shuffled_indices(static_cast<std::size_t>(n), pick);
  const int n_der = round_count(params.pv_battery_penetration, n);
  for (int k = 0; k < n_der; ++k) with_der[order[static_cast<std::size_t>(k)]] = true;

  std::vector<Household> pop;
  pop.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // one stream per household keeps each draw independent of population size
    Rng rng(mix_seed(params.seed, 1000 + static_cast<std::uint64_t>(i)));
    auto jit = [&](double v) { return j == 0.0 ? v : v * rng.uniform(1.0 - j, 1.0 + j); };

    Household hh;
    hh.id = i;
    hh.node_label = "node_" + std::to_string(i);

    HvacSpec hv;
    hv.p_max = Vec::Constant(h, jit(avg.hvac.p_max));
    hv.t_prefer = Vec::Constant(h, avg.hvac.t_prefer);
    hv.t_lower = Vec::Constant(h, avg.hvac.t_lower);
    hv.t_upper = Vec::Constant(h, avg.hvac.t_upper);
    // zeta1 and zeta2 share one factor so the natural-temperature gain zeta2/zeta1 stays put
    const double thermal = j == 0.0 ? 1.0 : rng.uniform(1.0 - j, 1.0 + j);
    hv.zeta1 = std::min(1.0, avg.hvac.zeta1 * thermal);
    hv.zeta2 = avg.hvac.zeta2 * thermal;
    hv.power_gain = jit(avg.hvac.power_gain);
    hv.gamma = jit(avg.hvac.gamma);
    hv.mode_sign = avg.hvac.mode_sign;
    hv.validate();
    hh.devices.emplace_back(std::move(hv));

    FlexLoadSpec fl;
    const auto& fa = avg.flex_load;
    Vec hourly(24);
    for (int k = 0; k < 24; ++k) hourly[k] = jit(fa.hourly_profile[static_cast<std::size_t>(k)]);
    fl.p_prefer.resize(h);
    fl.p_lower.resize(h);
    fl.p_upper.resize(h);
    for (Eigen::Index t = 0; t < h; ++t) {
      const int hour = static_cast<int>(std::floor(grid.hour_of(static_cast<int>(t))));
      const bool peak = std::find(fa.peak_hours.begin(), fa.peak_hours.end(), hour) != fa.peak_hours.end();
      const double band = peak ? fa.peak_band_fraction : fa.band_fraction;
      fl.p_prefer[t] = hourly[hour];
      fl.p_lower[t] = hourly[hour] * (1.0 - band);
      fl.p_upper[t] = hourly[hour] * (1.0 + band);
    }
    fl.total_energy = fl.p_prefer.sum() * grid.slot_duration_hours;
    fl.gamma = jit(fa.gamma);
    fl.validate(grid.slot_duration_hours);
    hh.devices.emplace_back(std::move(fl));

    if (with_der[static_cast<std::size_t>(i)]) {
      const auto& ba = avg.battery;
      BatterySpec b;
      const double rating = jit(ba.power_rating);
      b.p_charge_max = rating;
      b.p_discharge_max = rating;
      b.capacity_kwh = rating * ba.hours_at_rating;
      b.soc_init = ba.soc_init;
      b.soc_prefer = Vec::Constant(h, ba.soc_prefer);
      b.soc_lower = ba.soc_lower;
      b.soc_upper = ba.soc_upper;
      b.gamma = jit(ba.gamma);
      b.validate();

      PvSpec pv;
      pv.panel_rating_kw = jit(avg.pv.panel_rating_kw);
      pv.irradiance_ref = avg.pv.irradiance_ref;
      pv.gamma = jit(avg.pv.gamma);
      pv.validate();

      hh.devices.emplace_back(std::move(b));
      hh.devices.emplace_back(std::move(pv));
    }
    pop.push_back(std::move(hh));
  }
  return pop;
}

std::vector<Household> assign_participation(std::vector<Household> pop, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("participation_rate", "must lie in [0, 1]");
  Rng rng(mix_seed(seed, 2));
  const auto order = shuffled_indices(pop.size(), rng);
  const int k = round_count(rate, static_cast<int>(pop.size()));
  for (auto& hh : pop) hh.participating = false;
  for (int i = 0; i < k; ++i) pop[order[static_cast<std::size_t>(i)]].participating = true;
  return pop;
}

Archetype parse_archetype(const std::string& name) {
  if (name == "denver") return Archetype::denver;
  if (name == "los_angeles") return Archetype::los_angeles;
  if (name == "phoenix") return Archetype::phoenix;
  throw ConfigError("weather.archetype", "unknown archetype '" + name + "'");
}

std::string to_string(Archetype a) {
  switch (a) {
    case Archetype::denver: return "denver";
    case Archetype::los_angeles: return "los_angeles";
    case Archetype::phoenix: return "phoenix";
  }
  return "unknown";
}

ArchetypeParams archetype_defaults(Archetype a) {
  ArchetypeParams p;
  switch (a) {
    case Archetype::denver:
      break;
    case Archetype::los_angeles:
      p.annual_mean_f = 66.0;
      p.seasonal_amplitude_f = 7.0;
      p.warmest_day_of_year = 225;
      p.diurnal_amplitude_f = 9.0;
      p.day_noise_sd_f = 2.5;
      p.latitude_deg = 34.05;
      p.clear_sky_peak_w_m2 = 950.0;
      p.cloud_mean = 0.12;
      p.cloud_sd = 0.1;
      break;
    case Archetype::phoenix:
      p.annual_mean_f = 75.5;
      p.seasonal_amplitude_f = 19.0;
      p.warmest_day_of_year = 198;
      p.diurnal_amplitude_f = 12.0;
      p.day_noise_sd_f = 3.0;
      p.latitude_deg = 33.45;
      p.clear_sky_peak_w_m2 = 1000.0;
      p.cloud_mean = 0.1;
      p.cloud_sd = 0.15;
      break;
  }
  return p;
}

std::vector<WeatherDay> synthesize_weather(const ArchetypeParams& c, int first_day_of_year, int n_days,
                                           std::uint64_t seed, const TimeGrid& grid) {
  grid.validate();
  if (n_days < 1) throw ConfigError("weather.n_days", "must be at least 1");
  const double two_pi = 2.0 * std::numbers::pi;
  Rng rng(mix_seed(seed, 3));
  const Eigen::Index t_slots = grid.slots_per_day;
  std::vector<WeatherDay> days;
  days.reserve(static_cast<std::size_t>(n_days));
  double anomaly = 0.0;
  const double innovation_sd = c.day_noise_sd_f * std::sqrt(1.0 - c.day_noise_persistence * c.day_noise_persistence);
  for (int d = 0; d < n_days; ++d) {
    const int doy = (first_day_of_year - 1 + d) % 365 + 1;
    anomaly = d == 0 ? c.day_noise_sd_f * rng.normal()
                     : c.day_noise_persistence * anomaly + innovation_sd * rng.normal();
    const double cloud = std::clamp(c.cloud_mean + c.cloud_sd * rng.normal(), 0.0, 0.9);

    // daylight window from solar declination
    const double decl = 23.44 * std::numbers::pi / 180.0 * std::sin(two_pi * (284.0 + doy) / 365.0);
    const double lat = c.latitude_deg * std::numbers::pi / 180.0;
    const double cos_h0 = std::clamp(-std::tan(lat) * std::tan(decl), -1.0, 1.0);
    const double day_length = 24.0 / std::numbers::pi * std::acos(cos_h0);
    const double sunrise = 12.0 - day_length / 2.0;
    const double noon_elev = std::sin(std::numbers::pi / 2.0 - std::abs(lat - decl));

    WeatherDay w;
    w.date_index = first_day_of_year + d;
    w.temperature_f.resize(t_slots);
    w.irradiance_w_m2.resize(t_slots);
    const double seasonal =
        c.annual_mean_f + c.seasonal_amplitude_f * std::cos(two_pi * (doy - c.warmest_day_of_year) / 365.0);
    for (Eigen::Index t = 0; t < t_slots; ++t) {
      const double hour = grid.hour_of(static_cast<int>(t)) + grid.slot_duration_hours / 2.0;
      w.temperature_f[t] = seasonal + c.diurnal_amplitude_f * std::cos(two_pi * (hour - c.peak_hour) / 24.0) +
                           anomaly + c.hour_noise_sd_f * rng.normal();
      const double frac = (hour - sunrise) / day_length;
      const double hour_noise = 1.0 + 0.05 * rng.normal();
      double ghi = 0.0;
      if (frac > 0.0 && frac < 1.0) {
        ghi = c.clear_sky_peak_w_m2 * noon_elev * std::pow(std::sin(std::numbers::pi * frac), 1.3) *
              (1.0 - cloud) * hour_noise;
      }
      w.irradiance_w_m2[t] = std::max(0.0, ghi);
    }
    days.push_back(std::move(w));
  }
  return days;
}

std::vector<WeatherDay> make_forecast(const std::vector<WeatherDay>& realized, double temp_sd_f,
                                      double irradiance_rel_sd, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 4));
  std::vector<WeatherDay> out = realized;
  for (auto& w : out) {
    w.is_forecast = true;
    for (Eigen::Index t = 0; t < w.temperature_f.size(); ++t) {
      w.temperature_f[t] += temp_sd_f * rng.normal();
      w.irradiance_w_m2[t] = std::max(0.0, w.irradiance_w_m2[t] * (1.0 + irradiance_rel_sd * rng.normal()));
    }
  }
  return out;
}

std::vector<WeatherDay> load_weather_csv(const std::filesystem::path& path, const TimeGrid& grid) {
  grid.validate();
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open weather file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  // leading '#' lines are comments
  do {
    if (!std::getline(in, line)) throw ParseError(lineno + 1, "empty weather file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  } while (!line.empty() && line[0] == '#');
  if (line != "day,hour,temp_f,ghi_wm2")
    throw ParseError(lineno, "expected header 'day,hour,temp_f,ghi_wm2'");

  struct Partial {
    std::vector<double> temp, ghi;
    std::vector<bool> seen;
  };
  std::map<int, Partial> by_day;
  const int t_slots = grid.slots_per_day;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f[4];
    for (int k = 0; k < 4; ++k) {
      if (!std::getline(ss, f[k], ',')) throw ParseError(lineno, "expected 4 comma-separated fields");
    }
    std::string extra;
    if (std::getline(ss, extra, ',')) throw ParseError(lineno, "expected 4 comma-separated fields");
    int day = 0, hour = 0;
    double temp = 0.0, ghi = 0.0;
    try {
      std::size_t pos = 0;
      day = std::stoi(f[0], &pos);
      if (pos != f[0].size()) throw std::invalid_argument("day");
      hour = std::stoi(f[1], &pos);
      if (pos != f[1].size()) throw std::invalid_argument("hour");
      temp = std::stod(f[2], &pos);
      if (pos != f[2].size()) throw std::invalid_argument("temp");
      ghi = std::stod(f[3], &pos);
      if (pos != f[3].size()) throw std::invalid_argument("ghi");
    } catch (const std::exception&) {
      throw ParseError(lineno, "malformed numeric field");
    }
    if (hour < 0 || hour >= t_slots) throw ParseError(lineno, "hour out of range");
    if (ghi < 0.0)
      throw ValidationError("line " + std::to_string(lineno) + ": negative irradiance on day " + std::to_string(day));
    auto& p = by_day[day];
    if (p.seen.empty()) {
      p.temp.assign(static_cast<std::size_t>(t_slots), 0.0);
      p.ghi.assign(static_cast<std::size_t>(t_slots), 0.0);
      p.seen.assign(static_cast<std::size_t>(t_slots), false);
    }
    const auto hs = static_cast<std::size_t>(hour);
    if (p.seen[hs]) throw ParseError(lineno, "duplicate (day, hour)");
    p.seen[hs] = true;
    p.temp[hs] = temp;
    p.ghi[hs] = ghi;
  }
  std::vector<WeatherDay> days;
  for (auto& [day, p] : by_day) {
    const auto present = std::count(p.seen.begin(), p.seen.end(), true);
    if (present != t_slots)
      throw ValidationError("weather day " + std::to_string(day) + " has " + std::to_string(present) + " of " +
                            std::to_string(t_slots) + " hours");
    WeatherDay w;
    w.date_index = day;
    w.temperature_f = Eigen::Map<const Vec>(p.temp.data(), t_slots);
    w.irradiance_w_m2 = Eigen::Map<const Vec>(p.ghi.data(), t_slots);
    w.validate(grid);
    days.push_back(std::move(w));
  }
  return days;
}

void write_weather_csv(const std::filesystem::path& path, const std::vector<WeatherDay>& days,
                       const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(0, "cannot write weather file " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "day,hour,temp_f,ghi_wm2\n";
  char buf[128];
  for (const auto& w : days) {
    for (Eigen::Index t = 0; t < w.temperature_f.size(); ++t) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", w.date_index, static_cast<int>(t), w.temperature_f[t],
                    w.irradiance_w_m2[t]);
      out << buf;
    }
  }
}

}  // namespace flexsig
