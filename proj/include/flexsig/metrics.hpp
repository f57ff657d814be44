/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <vector>

#include "flexsig/devices.hpp"

namespace flexsig {

/// Sum of squared consecutive differences (no wrap-around term).
double quadratic_variation(const Vec& d);

/// epsilon * QV(d) + (1 - epsilon) * ||d||^2
double grid_cost(const Vec& d, double epsilon = 0.9);

/// Percentage reduction of the daily maximum relative to the baseline d0.
double pds_percent(const Vec& d, const Vec& d0);

/// Reduction of the window's highest daily peak relative to the baseline window.
double mps_percent(const std::vector<Vec>& days, const std::vector<Vec>& days0);

/// Summed daily peak reductions over summed baseline peaks.
double amps_percent(const std::vector<Vec>& days, const std::vector<Vec>& days0);

/// Largest absolute change between consecutive slots.
double max_hourly_variation(const Vec& d);

/// Mean over maximum.
double load_factor(const Vec& d);

double energy_reduction_pct(const Vec& d, const Vec& d0);

/// Relative reduction of summed daily max_hourly_variation versus the baseline window, in percent.
double variation_reduction_pct(const std::vector<Vec>& days, const std::vector<Vec>& days0);

struct DailyMetrics {
  double pds_pct = 0.0;
  double delta_max_kw = 0.0;
  double load_factor = 0.0;
  double energy_kwh = 0.0;
  double qv = 0.0;
  double grid_cost = 0.0;
  double peak_kw = 0.0;
  double energy_reduction_pct = 0.0;
};

DailyMetrics daily_metrics(const Vec& d, const Vec& d0, double slot_hours = 1.0, double epsilon = 0.9);

struct WindowSummary {
  int days = 0;
  double mean_pds_pct = 0.0;
  double frac_days_positive_pds = 0.0;
  double mps_pct = 0.0;
  double amps_pct = 0.0;
  double variation_reduction_pct = 0.0;
  double energy_reduction_pct = 0.0;
  double mean_load_factor = 0.0;
  double mean_load_factor_benchmark = 0.0;
  double mean_peak_kw = 0.0;
  double mean_peak_kw_benchmark = 0.0;
  double max_peak_kw = 0.0;
};

WindowSummary summarize_window(const std::vector<Vec>& days, const std::vector<Vec>& days0);

}  // namespace flexsig
