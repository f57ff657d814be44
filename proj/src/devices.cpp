/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "flexsig/devices.hpp"

#include <algorithm>
#include <cmath>

#include "flexsig/error.hpp"

namespace flexsig {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

bool all_finite(const Vec& v) { return v.allFinite(); }

// Applies the lower-triangular geometric kernel
//   out[i] = sum_{k<=i} retain^(i-k) * gain * x[k]
Vec geometric_filter(double retain, double gain, const Vec& x) {
  Vec out(x.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    acc = retain * acc + gain * x[i];
    out[i] = acc;
  }
  return out;
}

}  // namespace

void HvacSpec::validate() const {
  const auto h = p_max.size();
  require(h > 0, "hvac: empty horizon");
  require(t_prefer.size() == h && t_lower.size() == h && t_upper.size() == h,
          "hvac: vector lengths differ");
  require(all_finite(p_max) && all_finite(t_prefer) && all_finite(t_lower) && all_finite(t_upper),
          "hvac: non-finite entries");
  require((p_max.array() >= 0.0).all(), "hvac: p_max must be nonnegative");
  require((t_lower.array() <= t_prefer.array()).all() && (t_prefer.array() <= t_upper.array()).all(),
          "hvac: need t_lower <= t_prefer <= t_upper");
  require(zeta1 > 0.0 && zeta1 <= 1.0, "hvac: zeta1 must lie in (0, 1]");
  require(zeta2 > 0.0, "hvac: zeta2 must be positive");
  require(power_gain > 0.0, "hvac: power_gain must be positive");
  require(gamma >= 0.0, "hvac: gamma must be nonnegative");
  require(mode_sign == -1 || mode_sign == 1, "hvac: mode_sign must be -1 or +1");
}

void FlexLoadSpec::validate(double slot_hours) const {
  const auto h = p_prefer.size();
  require(h > 0, "flex_load: empty horizon");
  require(p_lower.size() == h && p_upper.size() == h, "flex_load: vector lengths differ");
  require(all_finite(p_prefer) && all_finite(p_lower) && all_finite(p_upper),
          "flex_load: non-finite entries");
  require((p_lower.array() >= 0.0).all(), "flex_load: bounds must be nonnegative");
  require((p_lower.array() <= p_prefer.array()).all() && (p_prefer.array() <= p_upper.array()).all(),
          "flex_load: need p_lower <= p_prefer <= p_upper");
  const double e = p_prefer.sum() * slot_hours;
  require(std::abs(e - total_energy) <= 1e-6 * std::max(1.0, std::abs(total_energy)),
          "flex_load: total_energy must equal the preferred schedule's energy");
  require(gamma >= 0.0, "flex_load: gamma must be nonnegative");
}

void BatterySpec::validate() const {
  require(soc_prefer.size() > 0, "battery: empty horizon");
  require(all_finite(soc_prefer), "battery: non-finite entries");
  require(p_charge_max >= 0.0 && p_discharge_max >= 0.0, "battery: ratings must be nonnegative");
  require(capacity_kwh > 0.0, "battery: capacity must be positive");
  require(soc_lower <= soc_upper, "battery: soc_lower > soc_upper");
  require((soc_prefer.array() >= soc_lower).all() && (soc_prefer.array() <= soc_upper).all(),
          "battery: soc_prefer outside [soc_lower, soc_upper]");
  require(soc_init >= soc_lower && soc_init <= soc_upper, "battery: soc_init outside band");
  require(gamma >= 0.0, "battery: gamma must be nonnegative");
}

void PvSpec::validate() const {
  require(panel_rating_kw >= 0.0, "pv: panel rating must be nonnegative");
  require(irradiance_ref > 0.0, "pv: irradiance_ref must be positive");
  require(gamma >= 0.0, "pv: gamma must be nonnegative");
}

DeviceKind kind_of(const DeviceSpec& spec) {
  return static_cast<DeviceKind>(spec.index());
}

std::string_view to_string(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::hvac: return "hvac";
    case DeviceKind::flex_load: return "flex_load";
    case DeviceKind::battery: return "battery";
    case DeviceKind::pv: return "pv";
  }
  return "unknown";
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::length: return "length";
    case ViolationKind::power_lower: return "power_lower";
    case ViolationKind::power_upper: return "power_upper";
    case ViolationKind::temperature_lower: return "temperature_lower";
    case ViolationKind::temperature_upper: return "temperature_upper";
    case ViolationKind::soc_lower: return "soc_lower";
    case ViolationKind::soc_upper: return "soc_upper";
    case ViolationKind::energy_balance: return "energy_balance";
  }
  return "unknown";
}

Vec hvac_natural_temperature(const HvacSpec& spec, double t_in_0, const Vec& t_out) {
  const double retain = 1.0 - spec.zeta1;
  Vec t0(t_out.size());
  double t = t_in_0;
  for (Eigen::Index m = 0; m < t_out.size(); ++m) {
    t = retain * t + spec.zeta2 * t_out[m];
    t0[m] = t;
  }
  return t0;
}

Vec hvac_indoor_temperature(const HvacSpec& spec, const Vec& t0, const Vec& power) {
  return t0 + spec.mode_sign * geometric_filter(1.0 - spec.zeta1, spec.power_gain, power);
}

std::pair<Vec, Vec> hvac_effective_band(const HvacSpec& spec, const Vec& t0) {
  // Track the interval of indoor-temperature deviations from t0 reachable
  // while staying inside the band so far. Where the next reachable interval
  // misses the band entirely, the violated edge moves out to the nearest
  // reachable temperature plus a small margin that keeps an interior.
  constexpr double margin = 0.05;
  const double retain = 1.0 - spec.zeta1;
  const Eigen::Index h = t0.size();
  Vec lower = spec.t_lower.head(h);
  Vec upper = spec.t_upper.head(h);
  double lo = 0.0, hi = 0.0;
  for (Eigen::Index i = 0; i < h; ++i) {
    const double push = spec.power_gain * spec.p_max[i];
    double r_lo = retain * lo, r_hi = retain * hi;
    if (spec.mode_sign < 0) {
      r_lo -= push;
    } else {
      r_hi += push;
    }
    const double b_lo = spec.t_lower[i] - t0[i];
    const double b_hi = spec.t_upper[i] - t0[i];
    if (r_lo > b_hi) {
      upper[i] = t0[i] + r_lo + margin;
      lo = r_lo;
      hi = std::min(r_hi, r_lo + margin);
    } else if (r_hi < b_lo) {
      lower[i] = t0[i] + r_hi - margin;
      hi = r_hi;
      lo = std::max(r_lo, r_hi - margin);
    } else {
      lo = std::max(r_lo, b_lo);
      hi = std::min(r_hi, b_hi);
    }
  }
  return {lower, upper};
}

Vec soc_trajectory(const BatterySpec& spec, const Vec& power, double slot_hours) {
  Vec soc(power.size());
  double acc = 0.0;
  for (Eigen::Index m = 0; m < power.size(); ++m) {
    acc += power[m] * slot_hours;
    soc[m] = spec.soc_init + acc / spec.capacity_kwh;
  }
  return soc;
}

Vec pv_availability(const PvSpec& spec, const Vec& irradiance) {
  Vec bound(irradiance.size());
  for (Eigen::Index t = 0; t < irradiance.size(); ++t) {
    if (irradiance[t] < 0.0) throw ValidationError("pv_availability: negative irradiance");
    bound[t] = -spec.panel_rating_kw * std::min(1.0, irradiance[t] / spec.irradiance_ref);
  }
  return bound;
}

double device_cost(const DeviceSpec& spec, const DevicePlan& plan, const DeviceContext& ctx) {
  const Vec& p = plan.power_kw;
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, HvacSpec>) {
          return s.gamma * (hvac_indoor_temperature(s, ctx.t0, p) - s.t_prefer).squaredNorm();
        } else if constexpr (std::is_same_v<T, FlexLoadSpec>) {
          return s.gamma * (p - s.p_prefer).squaredNorm();
        } else if constexpr (std::is_same_v<T, BatterySpec>) {
          return s.gamma * (soc_trajectory(s, p, ctx.slot_hours) - s.soc_prefer).squaredNorm();
        } else {
          return s.gamma * (p - ctx.pv_bound).squaredNorm();
        }
      },
      spec);
}

namespace {

void scan(std::vector<Violation>& out, const Vec& v, const Vec& lo, const Vec& hi, ViolationKind below,
          ViolationKind above, double tol) {
  for (Eigen::Index t = 0; t < v.size(); ++t) {
    const double under = lo[t] - v[t];
    const double over = v[t] - hi[t];
    if (under > tol) out.push_back({below, static_cast<std::size_t>(t), under});
    if (over > tol) out.push_back({above, static_cast<std::size_t>(t), over});
  }
}

Vec constant(Eigen::Index n, double x) { return Vec::Constant(n, x); }

}  // namespace

std::vector<Violation> check_feasible(const DeviceSpec& spec, const DevicePlan& plan,
                                      const DeviceContext& ctx, double tol) {
  std::vector<Violation> out;
  const Vec& p = plan.power_kw;
  const Eigen::Index h = p.size();
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, HvacSpec>) {
          if (s.p_max.size() != h || ctx.t0.size() != h) {
            out.push_back({ViolationKind::length, 0, 0.0});
            return;
          }
          scan(out, p, Vec::Zero(h), s.p_max, ViolationKind::power_lower, ViolationKind::power_upper, tol);
          const auto [lo, hi] = hvac_effective_band(s, ctx.t0);
          scan(out, hvac_indoor_temperature(s, ctx.t0, p), lo, hi, ViolationKind::temperature_lower,
               ViolationKind::temperature_upper, tol);
        } else if constexpr (std::is_same_v<T, FlexLoadSpec>) {
          if (s.p_prefer.size() != h) {
            out.push_back({ViolationKind::length, 0, 0.0});
            return;
          }
          scan(out, p, s.p_lower, s.p_upper, ViolationKind::power_lower, ViolationKind::power_upper, tol);
          const double e = p.sum() * ctx.slot_hours;
          const double rel = std::abs(e - s.total_energy) / std::max(std::abs(s.total_energy), 1e-12);
          if (rel > tol) out.push_back({ViolationKind::energy_balance, static_cast<std::size_t>(h), rel});
        } else if constexpr (std::is_same_v<T, BatterySpec>) {
          if (s.soc_prefer.size() != h) {
            out.push_back({ViolationKind::length, 0, 0.0});
            return;
          }
          scan(out, p, constant(h, -s.p_discharge_max), constant(h, s.p_charge_max),
               ViolationKind::power_lower, ViolationKind::power_upper, tol);
          scan(out, soc_trajectory(s, p, ctx.slot_hours), constant(h, s.soc_lower), constant(h, s.soc_upper),
               ViolationKind::soc_lower, ViolationKind::soc_upper, tol);
        } else {
          if (ctx.pv_bound.size() != h) {
            out.push_back({ViolationKind::length, 0, 0.0});
            return;
          }
          scan(out, p, ctx.pv_bound, Vec::Zero(h), ViolationKind::power_lower, ViolationKind::power_upper, tol);
        }
      },
      spec);
  return out;
}

DevicePlan complete_plan(const DeviceSpec& spec, Vec power, const DeviceContext& ctx) {
  DevicePlan plan;
  plan.power_kw = std::move(power);
  if (const auto* h = std::get_if<HvacSpec>(&spec)) {
    plan.aux_trajectory = hvac_indoor_temperature(*h, ctx.t0, plan.power_kw);
  } else if (const auto* b = std::get_if<BatterySpec>(&spec)) {
    plan.aux_trajectory = soc_trajectory(*b, plan.power_kw, ctx.slot_hours);
  }
  plan.cost = device_cost(spec, plan, ctx);
  return plan;
}

}  // namespace flexsig
