/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include <algorithm>

#include <doctest.h>

#include "flexsig/metrics.hpp"
#include "flexsig/rng.hpp"

using namespace flexsig;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Vec random_demand(Rng& rng, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(50.0, 200.0);
  return v;
}

}  // namespace

TEST_CASE("quadratic variation") {
  CHECK(quadratic_variation(Vec::Constant(5, 3.0)) == 0.0);
  CHECK(quadratic_variation(vec({0, 1, 0})) == 2.0);
  Rng rng(1);
  const Vec v = random_demand(rng, 24);
  CHECK(quadratic_variation(v + Vec::Constant(24, 7.5)) == doctest::Approx(quadratic_variation(v)).epsilon(1e-12));
}

TEST_CASE("grid cost") {
  Rng rng(2);
  const Vec v = random_demand(rng, 24);
  CHECK(grid_cost(v, 0.0) == doctest::Approx(v.squaredNorm()));
  CHECK(grid_cost(Vec::Constant(4, 2.0), 1.0) == 0.0);
  CHECK(grid_cost(vec({1, 2}), 0.9) == doctest::Approx(1.4).epsilon(1e-14));
}

TEST_CASE("grid cost is strictly convex") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const Vec d = random_demand(rng, 24);
    Vec u(24);
    for (int i = 0; i < 24; ++i) u[i] = rng.normal();
    u.normalize();
    const double s = 1e-2;
    const double second = grid_cost(d + s * u) - 2 * grid_cost(d) + grid_cost(d - s * u);
    // smallest Hessian eigenvalue is 2 * 0.1
    CHECK(second / (s * s) >= 0.2 - 1e-6);
  }
}

TEST_CASE("peak demand shaving") {
  Rng rng(4);
  const Vec d0 = random_demand(rng, 24);
  CHECK(pds_percent(d0, d0) == 0.0);
  Vec a = Vec::Constant(24, 500.0), b = Vec::Constant(24, 500.0);
  a[18] = 1340.0;
  b[18] = 900.0;
  CHECK(pds_percent(b, a) == doctest::Approx(440.0 / 1340.0 * 100.0).epsilon(1e-12));
  CHECK(pds_percent(1.1 * d0, d0) == doctest::Approx(-10.0).epsilon(1e-12));
}

TEST_CASE("monthly peak and aggregate peak shaving") {
  Rng rng(5);
  const Vec d = random_demand(rng, 24), d0 = random_demand(rng, 24);
  CHECK(mps_percent({d}, {d0}) == doctest::Approx(pds_percent(d, d0)));
  CHECK(amps_percent({d}, {d0}) == doctest::Approx(pds_percent(d, d0)));
  CHECK(mps_percent({d, d0}, {d, d0}) == 0.0);
  CHECK(amps_percent({d, d}, {d0, d0}) == doctest::Approx(pds_percent(d, d0)));
  const Vec base = Vec::Constant(24, 100.0);
  CHECK(std::abs(amps_percent({0.9 * base, 1.1 * base}, {base, base})) < 1e-12);
  // equal monthly maxima give zero MPS even when days differ
  Vec x = base, y = base;
  x[3] = 150;
  y[7] = 150;
  CHECK(mps_percent({x, base}, {base, y}) == 0.0);
}

TEST_CASE("maximum hourly variation") {
  CHECK(max_hourly_variation(Vec::Constant(6, 4.0)) == 0.0);
  CHECK(max_hourly_variation(vec({5, 7, 4})) == 3.0);
  Rng rng(6);
  const Vec v = random_demand(rng, 24);
  CHECK(max_hourly_variation(v.reverse()) == max_hourly_variation(v));
}

TEST_CASE("load factor") {
  CHECK(load_factor(Vec::Constant(24, 3.0)) == 1.0);
  CHECK(load_factor(vec({2, 0, 0, 0})) == 0.25);
  Rng rng(7);
  const double lf = load_factor(random_demand(rng, 24));
  CHECK(lf > 0.0);
  CHECK(lf <= 1.0);
}

TEST_CASE("energy reduction") {
  Rng rng(8);
  const Vec d0 = random_demand(rng, 24);
  Vec shifted = d0;
  std::reverse(shifted.data(), shifted.data() + shifted.size());
  CHECK(std::abs(energy_reduction_pct(shifted, d0)) < 1e-12);
  CHECK(energy_reduction_pct(0.958 * d0, d0) == doctest::Approx(4.2).epsilon(1e-12));
  // additivity over concatenated days
  const Vec d1 = random_demand(rng, 24), e1 = random_demand(rng, 24);
  Vec cat(48), cat0(48);
  cat << 0.9 * d0, d1;
  cat0 << d0, e1;
  const double direct = energy_reduction_pct(cat, cat0);
  const double combined = ((d0.sum() - 0.9 * d0.sum()) + (e1.sum() - d1.sum())) / (d0.sum() + e1.sum()) * 100;
  CHECK(direct == doctest::Approx(combined).epsilon(1e-12));
}

TEST_CASE("metrics are consistent under joint scaling") {
  Rng rng(9);
  const Vec d = random_demand(rng, 24), d0 = random_demand(rng, 24);
  const double c = 3.7;
  CHECK(pds_percent(c * d, c * d0) == doctest::Approx(pds_percent(d, d0)).epsilon(1e-12));
  CHECK(mps_percent({c * d}, {c * d0}) == doctest::Approx(mps_percent({d}, {d0})).epsilon(1e-12));
  CHECK(amps_percent({c * d}, {c * d0}) == doctest::Approx(amps_percent({d}, {d0})).epsilon(1e-12));
  CHECK(load_factor(c * d) == doctest::Approx(load_factor(d)).epsilon(1e-12));
  CHECK(energy_reduction_pct(c * d, c * d0) == doctest::Approx(energy_reduction_pct(d, d0)).epsilon(1e-12));
  CHECK(max_hourly_variation(c * d) == doctest::Approx(c * max_hourly_variation(d)).epsilon(1e-12));
  CHECK(quadratic_variation(c * d) == doctest::Approx(c * c * quadratic_variation(d)).epsilon(1e-12));
}

TEST_CASE("variation reduction sums daily maxima of hourly change") {
  Rng rng(10);
  std::vector<Vec> d, d0;
  double s = 0, s0 = 0;
  for (int i = 0; i < 5; ++i) {
    d.push_back(random_demand(rng, 24));
    d0.push_back(random_demand(rng, 24));
    s += max_hourly_variation(d.back());
    s0 += max_hourly_variation(d0.back());
  }
  CHECK(variation_reduction_pct(d, d0) == doctest::Approx((s0 - s) / s0 * 100).epsilon(1e-12));
}

TEST_CASE("window summary") {
  Rng rng(11);
  std::vector<Vec> d, d0;
  for (int i = 0; i < 4; ++i) {
    d0.push_back(random_demand(rng, 24));
    d.push_back(0.95 * d0.back());
  }
  d[2] = 1.2 * d0[2];
  const auto w = summarize_window(d, d0);
  CHECK(w.days == 4);
  CHECK(w.frac_days_positive_pds == 0.75);
  CHECK(w.mean_pds_pct == doctest::Approx((5 + 5 - 20 + 5) / 4.0).epsilon(1e-12));
  CHECK(w.amps_pct == doctest::Approx(amps_percent(d, d0)));
  CHECK(w.mps_pct == doctest::Approx(mps_percent(d, d0)));
  const auto m = daily_metrics(d[0], d0[0], 1.0, 0.9);
  CHECK(m.pds_pct == doctest::Approx(5.0));
  CHECK(m.energy_kwh == doctest::Approx(d[0].sum()));
  CHECK(m.grid_cost == doctest::Approx(grid_cost(d[0], 0.9)));
  CHECK(m.peak_kw == d[0].maxCoeff());
}
