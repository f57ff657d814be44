/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "flexsig/hems_solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "flexsig/error.hpp"
#include "flexsig/qp.hpp"

namespace flexsig {

namespace {

// Tie-break weight toward each device's preference point.
constexpr double kProx = 1e-9;

std::string describe(int id, const std::vector<BindingConstraint>& binding) {
  std::string s = "household " + std::to_string(id) + " infeasible:";
  for (const auto& b : binding) {
    s += " device " + std::to_string(b.device) + " (" + std::string(to_string(b.kind)) + ") " +
         std::string(to_string(b.constraint)) + " at slot " + std::to_string(b.slot) + ";";
  }
  return s;
}

Eigen::Index spec_horizon(const DeviceSpec& spec) {
  return std::visit(
      [](const auto& s) -> Eigen::Index {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PvSpec>) {
          return -1;
        } else {
          return static_cast<Eigen::Index>(s.horizon());
        }
      },
      spec);
}

struct DeviceVars {
  std::vector<int> power;  ///< QP index of the power variable per slot
  std::vector<int> state;  ///< indoor deviation (HVAC) or SOC (battery)
};

}  // namespace

void HouseholdProblem::validate() const {
  const Eigen::Index h = horizon();
  if (h <= 0) throw ValidationError("household problem: empty horizon");
  if (weather.irradiance_w_m2.size() != h) throw ValidationError("household problem: irradiance length mismatch");
  if (!(weather.slot_hours > 0.0)) throw ValidationError("household problem: slot_hours must be positive");
  if (!(gamma_scale > 0.0) || !std::isfinite(gamma_scale))
    throw ValidationError("household problem: gamma_scale must be positive");
  if (prices.has_value() != household.participating)
    throw ValidationError("household " + std::to_string(household.id) +
                          ": prices must be present exactly when the household participates");
  if (prices && (prices->size() != h || !prices->allFinite()))
    throw ValidationError("household problem: price vector must be finite with horizon length");
  for (const auto& d : household.devices) {
    const Eigen::Index dh = spec_horizon(d);
    if (dh >= 0 && dh != h) throw ValidationError("household problem: device horizon differs from weather horizon");
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, FlexLoadSpec>) {
            s.validate(weather.slot_hours);
          } else {
            s.validate();
          }
        },
        d);
  }
}

DeviceContext device_context(const DeviceSpec& spec, const WeatherContext& weather) {
  DeviceContext ctx;
  ctx.slot_hours = weather.slot_hours;
  if (const auto* h = std::get_if<HvacSpec>(&spec)) {
    ctx.t0 = hvac_natural_temperature(*h, weather.t_in_0, weather.t_out);
  } else if (const auto* pv = std::get_if<PvSpec>(&spec)) {
    ctx.pv_bound = pv_availability(*pv, weather.irradiance_w_m2);
  }
  return ctx;
}

InfeasibleError::InfeasibleError(int household_id, std::vector<BindingConstraint> binding)
    : std::runtime_error(describe(household_id, binding)), household_id_(household_id), binding_(std::move(binding)) {}

ConvergenceError::ConvergenceError(int household_id, HouseholdPlan best, const std::string& what)
    : std::runtime_error(what), household_id_(household_id), best_(std::move(best)) {}

HouseholdPlan solve_household(const HouseholdProblem& problem, const SolverOptions& opts) {
  problem.validate();
  const auto& devices = problem.household.devices;
  const Eigen::Index h = problem.horizon();
  const double dt = problem.weather.slot_hours;
  const double gs = problem.gamma_scale;
  const int id = problem.household.id;

  std::vector<DeviceContext> ctx;
  ctx.reserve(devices.size());
  for (const auto& d : devices) ctx.push_back(device_context(d, problem.weather));

  // Comfort bands, and literal-band infeasibility when relaxation is off.
  std::vector<std::pair<Vec, Vec>> bands(devices.size());
  std::vector<BindingConstraint> binding;
  for (std::size_t k = 0; k < devices.size(); ++k) {
    const auto* hv = std::get_if<HvacSpec>(&devices[k]);
    if (!hv) continue;
    bands[k] = hvac_effective_band(*hv, ctx[k].t0);
    if (!problem.relax_comfort) {
      for (Eigen::Index i = 0; i < h; ++i) {
        if (bands[k].second[i] > hv->t_upper[i]) {
          binding.push_back({k, DeviceKind::hvac, ViolationKind::temperature_upper, static_cast<std::size_t>(i)});
          break;
        }
        if (bands[k].first[i] < hv->t_lower[i]) {
          binding.push_back({k, DeviceKind::hvac, ViolationKind::temperature_lower, static_cast<std::size_t>(i)});
          break;
        }
      }
    }
  }
  if (!binding.empty()) throw InfeasibleError(id, std::move(binding));

  auto price = [&](DeviceKind kind, Eigen::Index i) {
    if (!problem.prices) return 0.0;
    if (problem.price_scope == PriceScope::hvac_only && kind != DeviceKind::hvac) return 0.0;
    return (*problem.prices)[i];
  };

  BoxQp qp;
  std::vector<DeviceVars> vars(devices.size());
  Vec sum_lo = Vec::Zero(h), sum_hi = Vec::Zero(h);
  for (std::size_t k = 0; k < devices.size(); ++k) {
    auto& v = vars[k];
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          const double g = s.gamma * gs;
          if constexpr (std::is_same_v<T, HvacSpec>) {
            const Vec& t0 = ctx[k].t0;
            const auto& [lo, hi] = bands[k];
            for (Eigen::Index i = 0; i < h; ++i) {
              v.power.push_back(qp.add_variable(2 * kProx, price(DeviceKind::hvac, i), 0.0, s.p_max[i], 0.0));
              sum_hi[i] += s.p_max[i];
              const double pref = s.t_prefer[i] - t0[i];
              v.state.push_back(qp.add_variable(2 * (g + kProx), -2 * (g + kProx) * pref, lo[i] - t0[i],
                                                hi[i] - t0[i], pref));
              // x_i - (1 - zeta1) x_{i-1} - sign * gain * p_i = 0
              const int row = qp.add_row(0.0);
              qp.set(row, v.state.back(), 1.0);
              if (i > 0) qp.set(row, v.state[static_cast<std::size_t>(i - 1)], -(1.0 - s.zeta1));
              qp.set(row, v.power.back(), -s.mode_sign * s.power_gain);
            }
          } else if constexpr (std::is_same_v<T, FlexLoadSpec>) {
            const int row = qp.add_row(s.total_energy);
            for (Eigen::Index i = 0; i < h; ++i) {
              v.power.push_back(qp.add_variable(2 * (g + kProx),
                                                -2 * (g + kProx) * s.p_prefer[i] + price(DeviceKind::flex_load, i),
                                                s.p_lower[i], s.p_upper[i], s.p_prefer[i]));
              qp.set(row, v.power.back(), dt);
              sum_lo[i] += s.p_lower[i];
              sum_hi[i] += s.p_upper[i];
            }
          } else if constexpr (std::is_same_v<T, BatterySpec>) {
            for (Eigen::Index i = 0; i < h; ++i) {
              v.power.push_back(
                  qp.add_variable(2 * kProx, price(DeviceKind::battery, i), -s.p_discharge_max, s.p_charge_max, 0.0));
              sum_lo[i] -= s.p_discharge_max;
              sum_hi[i] += s.p_charge_max;
              v.state.push_back(qp.add_variable(2 * (g + kProx), -2 * (g + kProx) * s.soc_prefer[i], s.soc_lower,
                                                s.soc_upper, s.soc_prefer[i]));
              // s_i - s_{i-1} - dt / cap * p_i = 0, with s_{-1} = soc_init
              const int row = qp.add_row(i == 0 ? s.soc_init : 0.0);
              qp.set(row, v.state.back(), 1.0);
              if (i > 0) qp.set(row, v.state[static_cast<std::size_t>(i - 1)], -1.0);
              qp.set(row, v.power.back(), -dt / s.capacity_kwh);
            }
          } else {
            const Vec& bound = ctx[k].pv_bound;
            for (Eigen::Index i = 0; i < h; ++i) {
              v.power.push_back(qp.add_variable(2 * (g + kProx),
                                                -2 * (g + kProx) * bound[i] + price(DeviceKind::pv, i), bound[i],
                                                0.0, bound[i]));
              sum_lo[i] += bound[i];
            }
          }
        },
        devices[k]);
  }

  if (problem.no_sell) {
    for (Eigen::Index i = 0; i < h; ++i) {
      if (sum_lo[i] >= 0.0) continue;  // net power cannot go negative here anyway
      if (sum_hi[i] <= 0.0) {
        // only zero net power is admissible: every device sits at its upper bound
        if (sum_hi[i] < -1e-12) {
          std::vector<BindingConstraint> b;
          for (std::size_t k = 0; k < devices.size(); ++k)
            b.push_back({k, kind_of(devices[k]), ViolationKind::power_upper, static_cast<std::size_t>(i)});
          throw InfeasibleError(id, std::move(b));
        }
        for (const auto& v : vars) {
          const int j = v.power[static_cast<std::size_t>(i)];
          qp.lo[j] = qp.hi[j];
        }
        continue;
      }
      const int slack = qp.add_variable(0.0, 0.0, 0.0, BoxQp::inf, 0.0);
      const int row = qp.add_row(0.0);
      qp.set(row, slack, -1.0);
      for (const auto& v : vars) qp.set(row, v.power[static_cast<std::size_t>(i)], 1.0);
    }
  }

  const QpResult sol = solve_box_qp(qp, {opts.max_iter, opts.tol});

  HouseholdPlan plan;
  plan.net_power_kw = Vec::Zero(h);
  plan.kkt_residual = sol.kkt_residual;
  plan.iterations = sol.iterations;
  double price_term = 0.0, cost = 0.0;
  for (std::size_t k = 0; k < devices.size(); ++k) {
    Vec p(h);
    for (Eigen::Index i = 0; i < h; ++i) p[i] = sol.x[vars[k].power[static_cast<std::size_t>(i)]];
    DevicePlan dp = complete_plan(devices[k], std::move(p), ctx[k]);
    cost += gs * dp.cost;
    for (Eigen::Index i = 0; i < h; ++i) price_term += price(kind_of(devices[k]), i) * dp.power_kw[i];
    plan.net_power_kw += dp.power_kw;
    plan.device_plans.push_back(std::move(dp));
  }
  plan.objective_value = cost + price_term;
  if (!sol.converged) {
    throw ConvergenceError(id, std::move(plan),
                           "household " + std::to_string(id) + ": solver did not converge (" + sol.message +
                               ", residual " + std::to_string(sol.kkt_residual) + ")");
  }
  return plan;
}

PopulationSolve solve_population(const std::vector<HouseholdProblem>& problems, const SolverOptions& opts,
                                 unsigned threads) {
  const std::size_t n = problems.size();
  PopulationSolve out;
  out.plans.resize(n);
  std::vector<std::optional<HouseholdFailure>> fail(n);

  auto work = [&](std::size_t i) {
    try {
      out.plans[i] = solve_household(problems[i], opts);
    } catch (const InfeasibleError& e) {
      fail[i] = HouseholdFailure{i, problems[i].household.id, true, e.what()};
    } catch (const ConvergenceError& e) {
      out.plans[i] = e.best();
      fail[i] = HouseholdFailure{i, problems[i].household.id, false, e.what()};
    } catch (const std::exception& e) {
      fail[i] = HouseholdFailure{i, problems[i].household.id, false, e.what()};
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& f : fail) {
    if (f) out.failures.push_back(std::move(*f));
  }
  return out;
}

}  // namespace flexsig
