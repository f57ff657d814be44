/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexsig/devices.hpp"
#include "flexsig/scenario.hpp"

namespace flexsig {

/// Weather and carried-over state a household plans against for one horizon.
struct WeatherContext {
  Vec t_out;             ///< outdoor temperature per slot
  Vec irradiance_w_m2;   ///< per slot
  double t_in_0 = 75.0;  ///< indoor temperature entering the first slot
  double slot_hours = 1.0;
};

enum class PriceScope { all_devices, hvac_only };

struct HouseholdProblem {
  Household household;
  std::optional<Vec> prices;  ///< present iff the household participates
  WeatherContext weather;
  bool no_sell = true;
  double gamma_scale = 1.0;
  PriceScope price_scope = PriceScope::all_devices;
  /// Hold HVAC to its effective band (see hvac_effective_band). When false the
  /// literal [t_lower, t_upper] band is enforced and may be infeasible.
  bool relax_comfort = true;

  Eigen::Index horizon() const { return weather.t_out.size(); }
  void validate() const;
};

struct SolverOptions {
  int max_iter = 5000;
  double tol = 1e-6;
};

struct HouseholdPlan {
  std::vector<DevicePlan> device_plans;  ///< parallel to household.devices
  Vec net_power_kw;
  double objective_value = 0.0;  ///< gamma_scale * sum of device costs + price term
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Device context (natural indoor temperature, PV bound) for one device.
DeviceContext device_context(const DeviceSpec& spec, const WeatherContext& weather);

struct BindingConstraint {
  std::size_t device = 0;  ///< index into household.devices
  DeviceKind kind = DeviceKind::hvac;
  ViolationKind constraint = ViolationKind::length;
  std::size_t slot = 0;
};

/// The device constraints admit no common point.
class InfeasibleError : public std::runtime_error {
public:
  InfeasibleError(int household_id, std::vector<BindingConstraint> binding);
  int household_id() const noexcept { return household_id_; }
  const std::vector<BindingConstraint>& binding() const noexcept { return binding_; }

private:
  int household_id_;
  std::vector<BindingConstraint> binding_;
};

/// The iteration limit was hit; carries the best iterate found.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(int household_id, HouseholdPlan best, const std::string& what);
  int household_id() const noexcept { return household_id_; }
  const HouseholdPlan& best() const noexcept { return best_; }

private:
  int household_id_;
  HouseholdPlan best_;
};

HouseholdPlan solve_household(const HouseholdProblem& problem, const SolverOptions& opts = {});

struct HouseholdFailure {
  std::size_t index = 0;
  int household_id = 0;
  bool infeasible = false;
  std::string message;
};

struct PopulationSolve {
  std::vector<HouseholdPlan> plans;  ///< best iterate or empty plan where a household failed
  std::vector<HouseholdFailure> failures;

  bool ok() const { return failures.empty(); }
};

/// Solves every problem; order-preserving and independent of `threads`
/// (0 picks the hardware concurrency).
PopulationSolve solve_population(const std::vector<HouseholdProblem>& problems, const SolverOptions& opts = {},
                                 unsigned threads = 0);

}  // namespace flexsig
