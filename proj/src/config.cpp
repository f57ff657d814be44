/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "flexsig/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "flexsig/error.hpp"

namespace flexsig {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(key_path(key), "expected a boolean");
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_unsigned()) {
            out = v.get<T>();
          } else {
            const auto s = v.get<std::int64_t>();
            if (s < 0) throw ConfigError(key_path(key), "must be nonnegative");
            out = static_cast<T>(s);
          }
        } else {
          out = v.get<T>();
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(key_path(key), "expected a number");
        out = v.get<T>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(key_path(key), "expected a string");
        out = v.get<std::string>();
      } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
        if (!v.is_string()) throw ConfigError(key_path(key), "expected a string");
        out = v.get<std::string>();
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!v.is_array()) throw ConfigError(key_path(key), "expected an array of numbers");
        out.clear();
        for (const auto& e : v) {
          if (!e.is_number()) throw ConfigError(key_path(key), "expected an array of numbers");
          out.push_back(e.get<double>());
        }
      } else if constexpr (std::is_same_v<T, std::vector<int>>) {
        if (!v.is_array()) throw ConfigError(key_path(key), "expected an array of integers");
        out.clear();
        for (const auto& e : v) {
          if (!e.is_number_integer()) throw ConfigError(key_path(key), "expected an array of integers");
          out.push_back(e.get<int>());
        }
      } else {
        static_assert(sizeof(T) == 0, "unsupported config type");
      }
    } catch (const json::exception& e) {
      throw ConfigError(key_path(key), e.what());
    }
  }

  std::optional<Reader> child(const std::string& key) {
    if (!j_.contains(key)) return std::nullopt;
    seen_.insert(key);
    return Reader(j_.at(key), key_path(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(key_path(k), "unknown key");
    }
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_hvac(Reader r, HvacAverages& a) {
  r.get("p_max", a.p_max);
  r.get("t_prefer", a.t_prefer);
  r.get("t_lower", a.t_lower);
  r.get("t_upper", a.t_upper);
  r.get("zeta1", a.zeta1);
  r.get("zeta2", a.zeta2);
  r.get("power_gain", a.power_gain);
  r.get("gamma", a.gamma);
  r.get("mode_sign", a.mode_sign);
  r.finish();
}

void read_flex(Reader r, FlexLoadAverages& a) {
  r.get("hourly_profile", a.hourly_profile);
  r.get("band_fraction", a.band_fraction);
  r.get("peak_band_fraction", a.peak_band_fraction);
  r.get("peak_hours", a.peak_hours);
  r.get("gamma", a.gamma);
  r.finish();
}

void read_battery(Reader r, BatteryAverages& a) {
  r.get("power_rating", a.power_rating);
  r.get("hours_at_rating", a.hours_at_rating);
  r.get("soc_init", a.soc_init);
  r.get("soc_prefer", a.soc_prefer);
  r.get("soc_lower", a.soc_lower);
  r.get("soc_upper", a.soc_upper);
  r.get("gamma", a.gamma);
  r.finish();
}

void read_pv(Reader r, PvAverages& a) {
  r.get("panel_rating_kw", a.panel_rating_kw);
  r.get("irradiance_ref", a.irradiance_ref);
  r.get("gamma", a.gamma);
  r.finish();
}

void read_population(Reader r, PopulationParams& p) {
  r.get("n_households", p.n_households);
  r.get("pv_battery_penetration", p.pv_battery_penetration);
  r.get("jitter_fraction", p.jitter_fraction);
  if (auto d = r.child("device_averages")) {
    if (auto c = d->child("hvac")) read_hvac(*c, p.device_averages.hvac);
    if (auto c = d->child("flex_load")) read_flex(*c, p.device_averages.flex_load);
    if (auto c = d->child("battery")) read_battery(*c, p.device_averages.battery);
    if (auto c = d->child("pv")) read_pv(*c, p.device_averages.pv);
    d->finish();
  }
  r.finish();
}

void read_tou(Reader r, TouSchedule& tou) {
  if (r.has("tiers")) {
    const json& tiers = r.raw("tiers");
    const std::string path = r.key_path("tiers");
    if (!tiers.is_array()) throw ConfigError(path, "expected an array");
    tou.tiers.clear();
    for (std::size_t i = 0; i < tiers.size(); ++i) {
      Reader t(tiers[i], path + "[" + std::to_string(i) + "]");
      TouTier tier;
      t.get("name", tier.name);
      t.get("rate", tier.rate);
      if (t.has("windows")) {
        const json& w = t.raw("windows");
        const std::string wp = t.key_path("windows");
        if (!w.is_array()) throw ConfigError(wp, "expected an array of [start, end] pairs");
        for (const auto& pair : w) {
          if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
            throw ConfigError(wp, "expected an array of [start, end] pairs");
          tier.windows.emplace_back(pair[0].get<double>(), pair[1].get<double>());
        }
      }
      t.finish();
      tou.tiers.push_back(std::move(tier));
    }
  }
  r.finish();
}

void read_mode(Reader r, SimulationMode& m) {
  std::string kind = to_string(m.kind);
  r.get("kind", kind);
  try {
    m.kind = parse_mode(kind);
  } catch (const ConfigError& e) {
    throw ConfigError(r.key_path("kind"), e.detail());
  }
  if (auto t = r.child("tou")) read_tou(*t, m.tou);
  if (auto n = r.child("negotiation")) {
    n->get("max_rounds", m.negotiation.max_rounds);
    n->get("tol", m.negotiation.tol);
    n->finish();
  }
  r.get("direct_control_gamma_scale", m.direct_control_gamma_scale);
  r.finish();
}

void read_hyper(Reader r, Hyperparams& h, std::filesystem::path& checkpoint) {
  r.get("k", h.k);
  r.get("hidden", h.hidden);
  r.get("d_in", h.d_in);
  r.get("lambda_l2", h.lambda_l2);
  r.get("lambda_variation", h.lambda_variation);
  r.get("lambda_entropy", h.lambda_entropy);
  r.get("lambda_contrast", h.lambda_contrast);
  r.get("gamma_offline", h.gamma_offline);
  r.get("eta_base", h.eta_base);
  r.get("offline_epochs", h.offline_epochs);
  r.get("checkpoint", checkpoint);
  r.finish();
}

void read_weather(Reader r, WeatherConfig& w) {
  std::string source = w.source == WeatherSource::csv ? "csv" : "synthetic";
  r.get("source", source);
  if (source == "csv") {
    w.source = WeatherSource::csv;
  } else if (source == "synthetic") {
    w.source = WeatherSource::synthetic;
  } else {
    throw ConfigError(r.key_path("source"), "expected 'synthetic' or 'csv'");
  }
  r.get("csv_path", w.csv_path);
  std::string archetype = to_string(w.archetype);
  r.get("archetype", archetype);
  w.archetype = parse_archetype(archetype);
  r.get("first_day_of_year", w.first_day_of_year);
  r.get("n_days", w.n_days);
  if (auto f = r.child("forecast")) {
    f->get("temp_sd_f", w.forecast_temp_sd_f);
    f->get("irradiance_rel_sd", w.forecast_irradiance_rel_sd);
    f->finish();
  }
  if (auto h = r.child("history")) {
    h->get("csv_path", w.history_csv_path);
    h->get("first_day_of_year", w.history_first_day_of_year);
    h->get("n_days", w.history_n_days);
    h->finish();
  }
  r.finish();
}

void read_seeds(Reader r, Seeds& s) {
  r.get("population", s.population);
  r.get("participation", s.participation);
  r.get("weather", s.weather);
  r.get("forecast", s.forecast);
  r.get("history", s.history);
  r.get("learner", s.learner);
  r.finish();
}

ordered_json tou_json(const TouSchedule& tou) {
  ordered_json tiers = ordered_json::array();
  for (const auto& t : tou.tiers) {
    ordered_json w = ordered_json::array();
    for (const auto& [a, b] : t.windows) w.push_back({a, b});
    tiers.push_back({{"name", t.name}, {"rate", t.rate}, {"windows", w}});
  }
  return {{"tiers", tiers}};
}

ordered_json resolved(const ScenarioConfig& c, bool with_output) {
  const auto& da = c.population.device_averages;
  ordered_json j;
  j["population"] = {
      {"n_households", c.population.n_households},
      {"pv_battery_penetration", c.population.pv_battery_penetration},
      {"jitter_fraction", c.population.jitter_fraction},
      {"device_averages",
       {{"hvac",
         {{"p_max", da.hvac.p_max},
          {"t_prefer", da.hvac.t_prefer},
          {"t_lower", da.hvac.t_lower},
          {"t_upper", da.hvac.t_upper},
          {"zeta1", da.hvac.zeta1},
          {"zeta2", da.hvac.zeta2},
          {"power_gain", da.hvac.power_gain},
          {"gamma", da.hvac.gamma},
          {"mode_sign", da.hvac.mode_sign}}},
        {"flex_load",
         {{"hourly_profile", da.flex_load.hourly_profile},
          {"band_fraction", da.flex_load.band_fraction},
          {"peak_band_fraction", da.flex_load.peak_band_fraction},
          {"peak_hours", da.flex_load.peak_hours},
          {"gamma", da.flex_load.gamma}}},
        {"battery",
         {{"power_rating", da.battery.power_rating},
          {"hours_at_rating", da.battery.hours_at_rating},
          {"soc_init", da.battery.soc_init},
          {"soc_prefer", da.battery.soc_prefer},
          {"soc_lower", da.battery.soc_lower},
          {"soc_upper", da.battery.soc_upper},
          {"gamma", da.battery.gamma}}},
        {"pv",
         {{"panel_rating_kw", da.pv.panel_rating_kw},
          {"irradiance_ref", da.pv.irradiance_ref},
          {"gamma", da.pv.gamma}}}}}};
  j["participation_rate"] = c.participation_rate;
  j["grid"] = {{"slots_per_day", c.grid.slots_per_day},
               {"slot_duration_hours", c.grid.slot_duration_hours},
               {"horizon_slots", c.grid.horizon_slots}};
  const auto& w = c.weather;
  j["weather"] = {{"source", w.source == WeatherSource::csv ? "csv" : "synthetic"},
                  {"csv_path", w.csv_path.string()},
                  {"archetype", to_string(w.archetype)},
                  {"first_day_of_year", w.first_day_of_year},
                  {"n_days", w.n_days},
                  {"forecast", {{"temp_sd_f", w.forecast_temp_sd_f}, {"irradiance_rel_sd", w.forecast_irradiance_rel_sd}}},
                  {"history",
                   {{"csv_path", w.history_csv_path.string()},
                    {"first_day_of_year", w.history_first_day_of_year},
                    {"n_days", w.history_n_days}}}};
  j["mode"] = {{"kind", to_string(c.mode.kind)},
               {"tou", tou_json(c.mode.tou)},
               {"negotiation", {{"max_rounds", c.mode.negotiation.max_rounds}, {"tol", c.mode.negotiation.tol}}},
               {"direct_control_gamma_scale", c.mode.direct_control_gamma_scale}};
  const auto& h = c.hyper;
  j["pricing"] = {{"k", h.k},
                  {"hidden", h.hidden},
                  {"d_in", h.d_in},
                  {"lambda_l2", h.lambda_l2},
                  {"lambda_variation", h.lambda_variation},
                  {"lambda_entropy", h.lambda_entropy},
                  {"lambda_contrast", h.lambda_contrast},
                  {"gamma_offline", h.gamma_offline},
                  {"eta_base", h.eta_base},
                  {"offline_epochs", h.offline_epochs},
                  {"checkpoint", c.checkpoint_path.string()}};
  j["objective_epsilon"] = c.objective_epsilon;
  j["household"] = {{"gamma_scale", c.gamma_scale},
                    {"hvac_only", c.hvac_only},
                    {"no_sell", c.no_sell},
                    {"initial_indoor_f", c.initial_indoor_f}};
  j["solver"] = {{"max_iter", c.solver.max_iter}, {"tol", c.solver.tol}};
  j["threads"] = c.threads;
  j["seeds"] = {{"population", c.seeds.population},
                {"participation", c.seeds.participation},
                {"weather", c.seeds.weather},
                {"forecast", c.seeds.forecast},
                {"history", c.seeds.history},
                {"learner", c.seeds.learner}};
  if (with_output) j["output_dir"] = c.output_dir.string();
  return j;
}

}  // namespace

void ScenarioConfig::validate() const {
  population.validate();
  if (!(participation_rate >= 0.0 && participation_rate <= 1.0))
    throw ConfigError("participation_rate", "must lie in [0, 1]");
  grid.validate();
  if (weather.source == WeatherSource::csv && weather.csv_path.empty())
    throw ConfigError("weather.csv_path", "required when source is csv");
  if (weather.source == WeatherSource::synthetic) {
    if (weather.n_days < 1) throw ConfigError("weather.n_days", "must be at least 1");
    if (weather.first_day_of_year < 1 || weather.first_day_of_year > 365)
      throw ConfigError("weather.first_day_of_year", "must lie in 1..365");
  }
  if (weather.forecast_temp_sd_f < 0.0) throw ConfigError("weather.forecast.temp_sd_f", "must be nonnegative");
  if (weather.forecast_irradiance_rel_sd < 0.0)
    throw ConfigError("weather.forecast.irradiance_rel_sd", "must be nonnegative");
  if (weather.history_n_days < 2) throw ConfigError("weather.history.n_days", "must be at least 2");
  hyper.validate();
  if (hyper.d_in != 2 * grid.slots_per_day)
    throw ConfigError("pricing.d_in", "must equal two features per slot of a day (" +
                                          std::to_string(2 * grid.slots_per_day) + ")");
  if (mode.kind == ModeKind::tou) {
    try {
      mode.tou.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("mode." + e.field(), e.detail());
    }
  }
  if (mode.negotiation.max_rounds < 1) throw ConfigError("mode.negotiation.max_rounds", "must be at least 1");
  if (!(mode.negotiation.tol > 0.0)) throw ConfigError("mode.negotiation.tol", "must be positive");
  if (!(mode.direct_control_gamma_scale > 0.0))
    throw ConfigError("mode.direct_control_gamma_scale", "must be positive");
  if (!(objective_epsilon >= 0.0 && objective_epsilon <= 1.0))
    throw ConfigError("objective_epsilon", "must lie in [0, 1]");
  if (!(gamma_scale > 0.0)) throw ConfigError("household.gamma_scale", "must be positive");
  if (solver.max_iter < 1) throw ConfigError("solver.max_iter", "must be at least 1");
  if (!(solver.tol > 0.0)) throw ConfigError("solver.tol", "must be positive");
}

ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  ScenarioConfig c;
  Reader r(j, "");
  if (auto p = r.child("population")) read_population(*p, c.population);
  r.get("participation_rate", c.participation_rate);
  if (auto g = r.child("grid")) {
    g->get("slots_per_day", c.grid.slots_per_day);
    g->get("slot_duration_hours", c.grid.slot_duration_hours);
    g->get("horizon_slots", c.grid.horizon_slots);
    g->finish();
  }
  if (auto w = r.child("weather")) read_weather(*w, c.weather);
  if (auto m = r.child("mode")) read_mode(*m, c.mode);
  if (auto p = r.child("pricing")) read_hyper(*p, c.hyper, c.checkpoint_path);
  r.get("objective_epsilon", c.objective_epsilon);
  if (auto h = r.child("household")) {
    h->get("gamma_scale", c.gamma_scale);
    h->get("hvac_only", c.hvac_only);
    h->get("no_sell", c.no_sell);
    h->get("initial_indoor_f", c.initial_indoor_f);
    h->finish();
  }
  if (auto s = r.child("solver")) {
    s->get("max_iter", c.solver.max_iter);
    s->get("tol", c.solver.tol);
    s->finish();
  }
  r.get("threads", c.threads);
  if (auto s = r.child("seeds")) read_seeds(*s, c.seeds);
  r.get("output_dir", c.output_dir);
  r.finish();
  c.population.seed = c.seeds.population;
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  ScenarioConfig c = parse_config(ss.str());
  // relative data paths resolve against the config file
  const auto base = path.parent_path();
  auto rebase = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  rebase(c.weather.csv_path);
  rebase(c.weather.history_csv_path);
  rebase(c.checkpoint_path);
  return c;
}

std::string config_to_json(const ScenarioConfig& config) { return resolved(config, true).dump(2); }

std::string config_fingerprint(const ScenarioConfig& config) {
  // FNV-1a over the canonical dump
  const std::string text = resolved(config, false).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void apply_seed_override(ScenarioConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--seed-override", "expected name=int, got '" + assignment + "'");
  const std::string name = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  std::uint64_t v = 0;
  try {
    std::size_t used = 0;
    if (value.empty() || value[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw ConfigError("--seed-override", "seed '" + name + "' needs a nonnegative integer, got '" + value + "'");
  }
  Seeds& s = config.seeds;
  if (name == "population") {
    s.population = v;
    config.population.seed = v;
  } else if (name == "participation") {
    s.participation = v;
  } else if (name == "weather") {
    s.weather = v;
  } else if (name == "forecast") {
    s.forecast = v;
  } else if (name == "history") {
    s.history = v;
  } else if (name == "learner") {
    s.learner = v;
  } else {
    throw ConfigError("--seed-override", "unknown seed '" + name + "'");
  }
}

}  // namespace flexsig
