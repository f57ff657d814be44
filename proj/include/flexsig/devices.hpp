/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace flexsig {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Power is signed at the meter: consumption positive, generation negative.
// Temperatures are in degrees Fahrenheit, energy in kWh, power in kW.

struct HvacSpec {
  Vec p_max;     ///< electrical rating per slot, kW
  Vec t_prefer;  ///< preferred indoor temperature per slot
  Vec t_lower;
  Vec t_upper;
  double zeta1 = 0.9;       ///< thermal retention: indoor keeps (1 - zeta1) of itself each slot
  double zeta2 = 1.0;       ///< outdoor coupling gain
  double power_gain = 1.0;  ///< indoor degrees moved per kWh of HVAC operation
  double gamma = 1.0;
  int mode_sign = -1;  ///< -1 cooling, +1 heating

  std::size_t horizon() const { return static_cast<std::size_t>(p_max.size()); }
  void validate() const;
};

struct FlexLoadSpec {
  Vec p_prefer;
  Vec p_lower;
  Vec p_upper;
  double total_energy = 0.0;  ///< kWh over the horizon
  double gamma = 1.0;

  std::size_t horizon() const { return static_cast<std::size_t>(p_prefer.size()); }
  void validate(double slot_hours) const;
};

struct BatterySpec {
  double p_charge_max = 5.0;
  double p_discharge_max = 5.0;  ///< magnitude
  double capacity_kwh = 20.0;
  double soc_init = 0.5;
  Vec soc_prefer;
  double soc_lower = 0.2;
  double soc_upper = 0.8;
  double gamma = 1.0;

  std::size_t horizon() const { return static_cast<std::size_t>(soc_prefer.size()); }
  void validate() const;
};

struct PvSpec {
  double panel_rating_kw = 5.0;
  double gamma = 1.0;
  double irradiance_ref = 1000.0;  ///< W/m^2 at which the panel reaches its rating

  void validate() const;
};

using DeviceSpec = std::variant<HvacSpec, FlexLoadSpec, BatterySpec, PvSpec>;

enum class DeviceKind { hvac, flex_load, battery, pv };

DeviceKind kind_of(const DeviceSpec& spec);
std::string_view to_string(DeviceKind kind);

struct DevicePlan {
  Vec power_kw;
  Vec aux_trajectory;  ///< indoor temperature (HVAC), SOC fraction (battery), empty otherwise
  double cost = 0.0;
};

/// Per-day inputs a device needs beyond its spec.
struct DeviceContext {
  Vec t0;        ///< HVAC natural indoor temperature (see hvac_natural_temperature)
  Vec pv_bound;  ///< PV availability, nonpositive
  double slot_hours = 1.0;
};

/// Indoor temperature with the HVAC off, for slots 1..H.
Vec hvac_natural_temperature(const HvacSpec& spec, double t_in_0, const Vec& t_out);

/// Indoor temperature for a given HVAC power schedule. Affine in `power`.
Vec hvac_indoor_temperature(const HvacSpec& spec, const Vec& t0, const Vec& power);

/// Comfort band the HVAC can actually be held to from the given natural
/// temperature. Equal to [t_lower, t_upper] wherever some feasible history
/// reaches the band; where none does, the missed edge moves out to the
/// closest reachable temperature (plus 0.05 F) so the set stays nonempty.
std::pair<Vec, Vec> hvac_effective_band(const HvacSpec& spec, const Vec& t0);

/// State of charge after each slot (unit charge and discharge efficiency).
Vec soc_trajectory(const BatterySpec& spec, const Vec& power, double slot_hours);

/// Maximum PV generation per slot as a nonpositive power bound.
Vec pv_availability(const PvSpec& spec, const Vec& irradiance);

/// gamma * ||deviation||^2 for the device's preference deviation.
double device_cost(const DeviceSpec& spec, const DevicePlan& plan, const DeviceContext& ctx);

enum class ViolationKind {
  length,
  power_lower,
  power_upper,
  temperature_lower,
  temperature_upper,
  soc_lower,
  soc_upper,
  energy_balance,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::size_t slot;  ///< 0-based; energy_balance reports the horizon length
  double magnitude;
};

inline constexpr double kFeasibilityTol = 1e-6;

/// Every hard constraint of the device's feasible set that `plan` breaks by
/// more than `tol` (absolute for power/temperature/SOC, relative for energy).
std::vector<Violation> check_feasible(const DeviceSpec& spec, const DevicePlan& plan,
                                      const DeviceContext& ctx, double tol = kFeasibilityTol);

/// Fills `aux_trajectory` and `cost` of a plan from its power schedule.
DevicePlan complete_plan(const DeviceSpec& spec, Vec power, const DeviceContext& ctx);

}  // namespace flexsig
