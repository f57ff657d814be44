/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "flexsig/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flexsig/error.hpp"

namespace flexsig {

namespace {

void same_length(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) throw ValidationError(std::string(what) + ": length mismatch");
}

void same_window(const std::vector<Vec>& a, const std::vector<Vec>& b, const char* what) {
  if (a.size() != b.size() || a.empty()) throw ValidationError(std::string(what) + ": windows must be equal and nonempty");
}

}  // namespace

double quadratic_variation(const Vec& d) {
  double s = 0.0;
  for (Eigen::Index t = 0; t + 1 < d.size(); ++t) s += (d[t + 1] - d[t]) * (d[t + 1] - d[t]);
  return s;
}

double grid_cost(const Vec& d, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("grid_cost: epsilon must lie in [0, 1]");
  return epsilon * quadratic_variation(d) + (1.0 - epsilon) * d.squaredNorm();
}

double pds_percent(const Vec& d, const Vec& d0) {
  same_length(d, d0, "pds_percent");
  const double base = d0.maxCoeff();
  if (!(base > 0.0)) throw ValidationError("pds_percent: baseline peak must be positive");
  return (base - d.maxCoeff()) / base * 100.0;
}

double mps_percent(const std::vector<Vec>& days, const std::vector<Vec>& days0) {
  same_window(days, days0, "mps_percent");
  double peak = -std::numeric_limits<double>::infinity(), peak0 = peak;
  for (std::size_t i = 0; i < days.size(); ++i) {
    peak = std::max(peak, days[i].maxCoeff());
    peak0 = std::max(peak0, days0[i].maxCoeff());
  }
  if (!(peak0 > 0.0)) throw ValidationError("mps_percent: baseline peak must be positive");
  return (peak0 - peak) / peak0 * 100.0;
}

double amps_percent(const std::vector<Vec>& days, const std::vector<Vec>& days0) {
  same_window(days, days0, "amps_percent");
  double red = 0.0, base = 0.0;
  for (std::size_t i = 0; i < days.size(); ++i) {
    red += days0[i].maxCoeff() - days[i].maxCoeff();
    base += days0[i].maxCoeff();
  }
  if (!(base > 0.0)) throw ValidationError("amps_percent: baseline peaks must sum to a positive value");
  return red / base * 100.0;
}

double max_hourly_variation(const Vec& d) {
  double m = 0.0;
  for (Eigen::Index t = 0; t + 1 < d.size(); ++t) m = std::max(m, std::abs(d[t + 1] - d[t]));
  return m;
}

double load_factor(const Vec& d) {
  const double peak = d.maxCoeff();
  if (!(peak > 0.0)) throw ValidationError("load_factor: peak must be positive");
  return d.sum() / (peak * static_cast<double>(d.size()));
}

double energy_reduction_pct(const Vec& d, const Vec& d0) {
  same_length(d, d0, "energy_reduction_pct");
  const double e0 = d0.sum();
  if (e0 == 0.0) throw ValidationError("energy_reduction_pct: baseline energy is zero");
  return (e0 - d.sum()) / e0 * 100.0;
}

double variation_reduction_pct(const std::vector<Vec>& days, const std::vector<Vec>& days0) {
  same_window(days, days0, "variation_reduction_pct");
  double v = 0.0, v0 = 0.0;
  for (std::size_t i = 0; i < days.size(); ++i) {
    v += max_hourly_variation(days[i]);
    v0 += max_hourly_variation(days0[i]);
  }
  if (!(v0 > 0.0)) throw ValidationError("variation_reduction_pct: baseline has no variation");
  return (v0 - v) / v0 * 100.0;
}

DailyMetrics daily_metrics(const Vec& d, const Vec& d0, double slot_hours, double epsilon) {
  DailyMetrics m;
  m.pds_pct = pds_percent(d, d0);
  m.delta_max_kw = max_hourly_variation(d);
  m.load_factor = load_factor(d);
  m.energy_kwh = d.sum() * slot_hours;
  m.qv = quadratic_variation(d);
  m.grid_cost = grid_cost(d, epsilon);
  m.peak_kw = d.maxCoeff();
  m.energy_reduction_pct = energy_reduction_pct(d, d0);
  return m;
}

WindowSummary summarize_window(const std::vector<Vec>& days, const std::vector<Vec>& days0) {
  same_window(days, days0, "summarize_window");
  WindowSummary s;
  s.days = static_cast<int>(days.size());
  double e = 0.0, e0 = 0.0;
  int positive = 0;
  s.max_peak_kw = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < days.size(); ++i) {
    const double p = pds_percent(days[i], days0[i]);
    s.mean_pds_pct += p;
    if (p > 0.0) ++positive;
    e += days[i].sum();
    e0 += days0[i].sum();
    s.mean_load_factor += load_factor(days[i]);
    s.mean_load_factor_benchmark += load_factor(days0[i]);
    s.mean_peak_kw += days[i].maxCoeff();
    s.mean_peak_kw_benchmark += days0[i].maxCoeff();
    s.max_peak_kw = std::max(s.max_peak_kw, days[i].maxCoeff());
  }
  const double n = static_cast<double>(days.size());
  s.mean_pds_pct /= n;
  s.frac_days_positive_pds = positive / n;
  s.mean_load_factor /= n;
  s.mean_load_factor_benchmark /= n;
  s.mean_peak_kw /= n;
  s.mean_peak_kw_benchmark /= n;
  s.mps_pct = mps_percent(days, days0);
  s.amps_pct = amps_percent(days, days0);
  s.variation_reduction_pct = variation_reduction_pct(days, days0);
  s.energy_reduction_pct = (e0 - e) / e0 * 100.0;
  return s;
}

}  // namespace flexsig
