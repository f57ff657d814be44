/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "flexsig/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "flexsig/error.hpp"
#include "flexsig/metrics.hpp"

namespace flexsig {

ModeKind parse_mode(const std::string& name) {
  if (name == "benchmark") return ModeKind::benchmark;
  if (name == "tou") return ModeKind::tou;
  if (name == "dynamic_context_agnostic") return ModeKind::dynamic_context_agnostic;
  if (name == "dynamic_clustered") return ModeKind::dynamic_clustered;
  if (name == "two_way") return ModeKind::two_way;
  if (name == "direct_control") return ModeKind::direct_control;
  throw ConfigError("mode", "unknown mode '" + name + "'");
}

std::string to_string(ModeKind kind) {
  switch (kind) {
    case ModeKind::benchmark: return "benchmark";
    case ModeKind::tou: return "tou";
    case ModeKind::dynamic_context_agnostic: return "dynamic_context_agnostic";
    case ModeKind::dynamic_clustered: return "dynamic_clustered";
    case ModeKind::two_way: return "two_way";
    case ModeKind::direct_control: return "direct_control";
  }
  return "unknown";
}

namespace {

Vec horizon_series(const Vec& today, const Vec* next, Eigen::Index h) {
  if (h == today.size()) return today;
  Vec out(h);
  const Eigen::Index t = today.size();
  for (Eigen::Index i = 0; i < h; ++i) {
    const Eigen::Index day = i / t;
    out[i] = (day == 0 || !next) ? today[i % t] : (*next)[i % t];
  }
  return out;
}

}  // namespace

std::vector<HouseholdProblem> day_problems(const std::vector<Household>& pop, const std::vector<HouseholdState>& state,
                                           const std::optional<Vec>& prices, const DayInputs& day,
                                           const TimeGrid& grid, double participant_gamma_scale, PriceScope scope,
                                           bool no_sell) {
  if (state.size() != pop.size()) throw ValidationError("day_problems: state size differs from population");
  const Eigen::Index h = grid.horizon_slots;
  const WeatherDay& f = *day.forecast;
  const Vec t_out = horizon_series(f.temperature_f, day.forecast_next ? &day.forecast_next->temperature_f : nullptr, h);
  const Vec irr =
      horizon_series(f.irradiance_w_m2, day.forecast_next ? &day.forecast_next->irradiance_w_m2 : nullptr, h);
  std::vector<HouseholdProblem> out;
  out.reserve(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) {
    HouseholdProblem p;
    p.household = pop[i];
    p.household.participating = pop[i].participating && prices.has_value();
    for (auto& d : p.household.devices) {
      if (auto* b = std::get_if<BatterySpec>(&d)) b->soc_init = std::clamp(state[i].soc, b->soc_lower, b->soc_upper);
    }
    if (p.household.participating) {
      p.prices = *prices;
      p.gamma_scale = participant_gamma_scale;
    }
    p.weather.t_out = t_out;
    p.weather.irradiance_w_m2 = irr;
    p.weather.t_in_0 = state[i].t_in;
    p.weather.slot_hours = grid.slot_duration_hours;
    p.no_sell = no_sell;
    p.price_scope = scope;
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

void throw_failures(const PopulationSolve& sol) {
  if (sol.ok()) return;
  std::string msg = std::to_string(sol.failures.size()) + " household solve(s) failed; first: " +
                     sol.failures.front().message;
  throw std::runtime_error(msg);
}

}  // namespace

DayResult run_day(const std::vector<Household>& pop, const std::vector<HouseholdState>& state,
                  const std::optional<Vec>& prices, const DayInputs& day, const TimeGrid& grid,
                  double participant_gamma_scale, PriceScope scope, bool no_sell, const SolverOptions& opts,
                  unsigned threads) {
  const Eigen::Index t_day = grid.slots_per_day;
  const Eigen::Index h = grid.horizon_slots;
  const auto problems = day_problems(pop, state, prices, day, grid, participant_gamma_scale, scope, no_sell);
  PopulationSolve sol = solve_population(problems, opts, threads);
  throw_failures(sol);

  DayResult r;
  r.aggregate_kw = Vec::Zero(t_day);
  r.planned_kw = Vec::Zero(h);
  r.next_state = state;
  const Vec& t_out_real = day.realized->temperature_f;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const HouseholdPlan& plan = sol.plans[i];
    r.planned_kw += plan.net_power_kw;
    r.max_kkt_residual = std::max(r.max_kkt_residual, plan.kkt_residual);
    r.max_iterations = std::max(r.max_iterations, plan.iterations);
    const auto& devices = problems[i].household.devices;
    for (std::size_t k = 0; k < devices.size(); ++k) {
      const Vec p = plan.device_plans[k].power_kw.head(t_day);
      if (const auto* hv = std::get_if<HvacSpec>(&devices[k])) {
        // executed power meets the realized weather
        HvacSpec day_spec = *hv;
        day_spec.p_max = hv->p_max.head(t_day);
        const Vec t0 = hvac_natural_temperature(day_spec, state[i].t_in, t_out_real);
        r.next_state[i].t_in = hvac_indoor_temperature(day_spec, t0, p)[t_day - 1];
        r.aggregate_kw += p;
      } else if (const auto* pv = std::get_if<PvSpec>(&devices[k])) {
        const Vec avail = pv_availability(*pv, day.realized->irradiance_w_m2);
        r.aggregate_kw += p.cwiseMax(avail);
      } else if (const auto* b = std::get_if<BatterySpec>(&devices[k])) {
        BatterySpec day_spec = *b;
        const Vec soc = soc_trajectory(day_spec, p, grid.slot_duration_hours);
        r.next_state[i].soc = std::clamp(soc[t_day - 1], b->soc_lower, b->soc_upper);
        r.aggregate_kw += p;
      } else {
        r.aggregate_kw += p;
      }
    }
  }
  r.plans = std::move(sol.plans);
  return r;
}

NegotiationResult two_way_negotiate(const std::vector<Household>& pop, const std::vector<HouseholdState>& state,
                                    const DayInputs& day, const TimeGrid& grid, const PriceSignal& start,
                                    const SmoothnessMetric& metric, double eta_base, const NegotiationParams& params,
                                    double participant_gamma_scale, PriceScope scope, bool no_sell,
                                    const SolverOptions& opts, unsigned threads) {
  if (params.max_rounds < 1) throw ConfigError("mode.negotiation.max_rounds", "must be at least 1");
  std::vector<Household> in, out;
  std::vector<HouseholdState> s_in, s_out;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    (pop[i].participating ? in : out).push_back(pop[i]);
    (pop[i].participating ? s_in : s_out).push_back(state[i]);
  }
  const double n = static_cast<double>(pop.size());
  const Eigen::Index h = grid.horizon_slots;
  Vec fixed = Vec::Zero(h);
  {
    const auto sol = solve_population(day_problems(out, s_out, std::nullopt, day, grid, 1.0, scope, no_sell), opts,
                                      threads);
    throw_failures(sol);
    for (const auto& p : sol.plans) fixed += p.net_power_kw;
  }

  NegotiationResult res;
  PriceSignal alpha = start;
  // Without convergence, keep the round whose anticipated demand the
  // operator prefers.
  PriceSignal best = start;
  double best_cost = std::numeric_limits<double>::infinity();
  double best_change = 0.0;
  for (int r = 1; r <= params.max_rounds; ++r) {
    Vec total = fixed;
    if (!in.empty()) {
      const auto sol = solve_population(
          day_problems(in, s_in, alpha.values, day, grid, participant_gamma_scale, scope, no_sell), opts, threads);
      throw_failures(sol);
      for (const auto& p : sol.plans) total += p.net_power_kw;
    }
    const FeedbackResult next = feedback_update(alpha, total / n, eta_base, metric);
    const double base = alpha.values.norm();
    const double change = base > 0.0 ? (next.alpha.values - alpha.values).norm() / base
                                     : (next.alpha.values.norm() > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    res.rounds = r;
    res.last_change = change;
    const double cost = grid_cost(total);
    if (cost < best_cost) {
      best_cost = cost;
      best_change = change;
      best = alpha;
    }
    if (change <= params.tol) {
      res.converged = true;
      res.alpha = alpha;
      return res;
    }
    alpha = next.alpha;
  }
  res.alpha = best;
  res.last_change = best_change;
  return res;
}

SimulationTrace run_horizon(const SimulationSetup& setup) {
  const TimeGrid& grid = setup.grid;
  grid.validate();
  setup.hyper.validate();
  if (setup.realized.empty()) throw ConfigError("weather", "no weather days");
  if (setup.forecast.size() != setup.realized.size())
    throw ConfigError("weather", "forecast and realized series differ in length");
  for (const auto& d : setup.realized) d.validate(grid);
  for (const auto& d : setup.forecast) d.validate(grid);
  const ModeKind kind = setup.mode.kind;
  if (kind == ModeKind::dynamic_clustered && !setup.classifier)
    throw ConfigError("pricing.checkpoint", "dynamic_clustered mode needs a trained classifier");

  std::vector<Household> pop = setup.population;
  if (kind == ModeKind::benchmark) {
    for (auto& hh : pop) hh.participating = false;
  }
  std::vector<HouseholdState> state(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) {
    state[i].t_in = setup.initial_indoor_f;
    for (const auto& d : pop[i].devices) {
      if (const auto* b = std::get_if<BatterySpec>(&d)) state[i].soc = b->soc_init;
    }
  }

  const int h = grid.horizon_slots;
  const int t_day = grid.slots_per_day;
  const SmoothnessMetric metric(h, setup.hyper.metric_lambda());
  const double eta = setup.hyper.eta_base;
  const double participant_scale =
      setup.gamma_scale * (kind == ModeKind::direct_control ? setup.mode.direct_control_gamma_scale : 1.0);

  PriceSignal alpha;
  alpha.values = Vec::Zero(h);
  std::optional<ClusterBank> bank;
  if (kind == ModeKind::dynamic_clustered) bank = ClusterBank::zeros(h, setup.classifier->k(), metric);
  const PriceSignal tou = kind == ModeKind::tou ? tou_signal(setup.mode.tou, grid) : PriceSignal{};

  SimulationTrace trace;
  trace.mode = kind;
  trace.config_fingerprint = setup.config_fingerprint;
  Vec prev_prices;
  const double n = static_cast<double>(std::max<std::size_t>(pop.size(), 1));
  for (std::size_t d = 0; d < setup.realized.size(); ++d) {
    DayRecord rec;
    rec.date_index = setup.realized[d].date_index;
    try {
      DayInputs in{&setup.realized[d], &setup.forecast[d],
                   h > t_day ? &setup.forecast[std::min(d + 1, setup.forecast.size() - 1)] : nullptr};
      std::optional<Vec> prices;
      Vec weights;
      switch (kind) {
        case ModeKind::benchmark:
          break;
        case ModeKind::tou:
          prices = tou.values;
          break;
        case ModeKind::dynamic_context_agnostic:
          prices = alpha.values;
          break;
        case ModeKind::dynamic_clustered:
          weights = cluster_weights(*setup.classifier, setup.forecast[d]);
          prices = cluster_price(*bank, weights).values;
          break;
        case ModeKind::two_way:
        case ModeKind::direct_control: {
          const NegotiationResult neg =
              two_way_negotiate(pop, state, in, grid, alpha, metric, eta, setup.mode.negotiation, participant_scale,
                                setup.price_scope, setup.no_sell, setup.solver, setup.threads);
          rec.negotiation_rounds = neg.rounds;
          rec.negotiation_converged = neg.converged;
          alpha = neg.alpha;
          prices = alpha.values;
          break;
        }
      }
      DayResult day = run_day(pop, state, prices, in, grid, participant_scale, setup.price_scope, setup.no_sell,
                              setup.solver, setup.threads);
      Vec g(h);
      g.head(t_day) = day.aggregate_kw / n;
      if (h > t_day) g.tail(h - t_day) = day.planned_kw.tail(h - t_day) / n;

      if (kind == ModeKind::dynamic_context_agnostic) {
        alpha = feedback_update(alpha, g, eta, metric).alpha;
      } else if (kind == ModeKind::dynamic_clustered) {
        bank = cluster_update(*bank, weights, g, eta).bank;
      }

      if (prices) {
        rec.prices = *prices;
        if (prev_prices.size() == prices->size() && prev_prices.norm() > 0.0)
          rec.price_change_rel = (*prices - prev_prices).norm() / prev_prices.norm();
        prev_prices = *prices;
      }
      rec.aggregate_demand_kw = day.aggregate_kw;
      rec.mean_demand_kw = g;
      rec.cluster_weights = weights;
      rec.max_kkt_residual = day.max_kkt_residual;
      rec.max_iterations = day.max_iterations;
      state = std::move(day.next_state);
      trace.days.push_back(std::move(rec));
    } catch (const std::exception& e) {
      trace.error = "day " + std::to_string(rec.date_index) + ": " + e.what();
      if (bank) trace.final_kappa = bank->kappa;
      return trace;
    }
  }
  if (bank) trace.final_kappa = bank->kappa;
  trace.complete = true;
  return trace;
}

SimulationTrace direct_control_run(SimulationSetup setup) {
  setup.mode.kind = ModeKind::direct_control;
  return run_horizon(setup);
}

int convergence_day(const SimulationTrace& trace, double threshold) {
  for (std::size_t i = 0; i < trace.days.size(); ++i) {
    const double c = trace.days[i].price_change_rel;
    if (c >= 0.0 && c < threshold) return static_cast<int>(i) + 1;
  }
  return 0;
}

}  // namespace flexsig
