/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include <doctest.h>

#include "flexsig/hems_solver.hpp"
#include "flexsig/rng.hpp"
#include "flexsig/scenario.hpp"
#include "oracles.hpp"

using namespace flexsig;
namespace ft = flexsig::testing;

namespace {

WeatherContext weather(int h, double t_out = 85.0, double irr = 600.0) {
  WeatherContext w;
  w.t_out = Vec::Constant(h, t_out);
  w.irradiance_w_m2 = Vec::Constant(h, irr);
  return w;
}

HouseholdProblem single(DeviceSpec d, int h) {
  HouseholdProblem p;
  p.household.devices.push_back(std::move(d));
  p.weather = weather(h);
  return p;
}

void participate(HouseholdProblem& p, Vec prices) {
  p.household.participating = true;
  p.prices = std::move(prices);
}

void check_plan_feasible(const HouseholdProblem& p, const HouseholdPlan& plan) {
  Vec sum = Vec::Zero(p.horizon());
  for (std::size_t k = 0; k < p.household.devices.size(); ++k) {
    const auto ctx = device_context(p.household.devices[k], p.weather);
    const auto v = check_feasible(p.household.devices[k], plan.device_plans[k], ctx);
    CHECK(v.empty());
    sum += plan.device_plans[k].power_kw;
  }
  CHECK((sum - plan.net_power_kw).cwiseAbs().maxCoeff() < 1e-9);
  if (p.no_sell) CHECK(plan.net_power_kw.minCoeff() >= -1e-6);
}

}  // namespace

TEST_CASE("non-participant flexible load sits at its preference") {
  Rng rng(1);
  const auto f = ft::random_flex(rng, 24, 1.0);
  const auto plan = solve_household(single(f, 24));
  CHECK((plan.device_plans[0].power_kw - f.p_prefer).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(plan.objective_value < 1e-9);
}

TEST_CASE("PV-only participant under no-sell curtails fully") {
  auto p = single(PvSpec{}, 24);
  participate(p, Vec::Constant(24, 0.3));
  const auto plan = solve_household(p);
  CHECK(plan.net_power_kw.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("battery at its preferred SOC stays idle") {
  BatterySpec b;
  b.soc_init = 0.5;
  b.soc_prefer = Vec::Constant(24, 0.5);
  const auto plan = solve_household(single(b, 24));
  // no-sell holds the battery at a bound where the SOC cost is nearly flat,
  // so power resolves only to about sqrt(tol / curvature)
  CHECK(plan.net_power_kw.cwiseAbs().maxCoeff() < 1e-2);
  CHECK(plan.objective_value < 1e-5);
}

TEST_CASE("two-slot HVAC matches a grid search") {
  Rng rng(17);
  for (int rep = 0; rep < 5; ++rep) {
    HouseholdProblem p = ft::random_household_problem(rng, 2, 1);
    while (!std::holds_alternative<HvacSpec>(p.household.devices[0])) p = ft::random_household_problem(rng, 2, 1);
    const auto& s = std::get<HvacSpec>(p.household.devices[0]);
    const auto plan = solve_household(p);
    const auto qp = ft::household_dense_qp(p);
    const auto grid = ft::grid_minimum_2d(qp, Vec::Zero(2), s.p_max.head(2), 1e-3);
    REQUIRE(grid.has_value());
    const double obj = qp.objective(ft::stacked_power(plan));
    CHECK(obj <= *grid + 1e-5);
    CHECK(obj >= *grid - 1e-2);  // grid spacing bounds how far below it the optimum can be
  }
}

TEST_CASE("random small households agree with active-set enumeration") {
  Rng rng(23);
  for (int rep = 0; rep < 40; ++rep) {
    const int h = 2 + static_cast<int>(rng.index(2));
    const int nd = 1 + static_cast<int>(rng.index(2));
    const auto p = ft::random_household_problem(rng, h, nd);
    const auto plan = solve_household(p);
    const auto qp = ft::household_dense_qp(p);
    const auto exact = ft::active_set_minimum(qp);
    REQUIRE(exact.has_value());
    CHECK(std::abs(qp.objective(ft::stacked_power(plan)) - qp.objective(*exact)) <= 1e-5);
    CHECK(plan.kkt_residual <= 1e-6);
    check_plan_feasible(p, plan);
  }
}

TEST_CASE("reported objective is the scaled preference cost plus the price term") {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const auto p = ft::random_household_problem(rng, 3, 2);
    const auto plan = solve_household(p);
    const auto qp = ft::household_dense_qp(p);
    CHECK(plan.objective_value == doctest::Approx(qp.objective(ft::stacked_power(plan))).epsilon(1e-9));
  }
}

TEST_CASE("raising one slot's price never raises that slot's flexible load") {
  Rng rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    auto f = ft::random_flex(rng, 6, 1.0);
    auto p = single(f, 6);
    Vec a(6);
    for (int i = 0; i < 6; ++i) a[i] = rng.uniform(-0.3, 0.3);
    participate(p, a);
    const auto base = solve_household(p);
    const int slot = static_cast<int>(rng.index(6));
    (*p.prices)[slot] += rng.uniform(0.01, 0.5);
    const auto up = solve_household(p);
    CHECK(up.net_power_kw[slot] <= base.net_power_kw[slot] + 1e-6);
  }
}

TEST_CASE("non-participant plans ignore prices and huge elasticity ignores them too") {
  PopulationParams pp;
  pp.n_households = 4;
  pp.pv_battery_penetration = 0.5;
  const auto pop = generate_population(pp, TimeGrid{});
  const auto days = synthesize_weather(Archetype::denver, 200, 1, 3, TimeGrid{});
  for (const auto& hh : pop) {
    HouseholdProblem p;
    p.household = hh;
    p.weather.t_out = days[0].temperature_f;
    p.weather.irradiance_w_m2 = days[0].irradiance_w_m2;
    const auto out = solve_household(p);

    HouseholdProblem q = p;
    q.household.participating = true;
    q.prices = Vec::LinSpaced(24, -0.5, 0.5);
    q.gamma_scale = 1e4;
    const auto rigid = solve_household(q);
    CHECK((rigid.net_power_kw - out.net_power_kw).cwiseAbs().maxCoeff() < 5e-2);
  }
}

TEST_CASE("feasible perturbations never improve on the returned plan") {
  Rng rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = ft::random_household_problem(rng, 3, 2);
    const auto plan = solve_household(p);
    const auto qp = ft::household_dense_qp(p);
    const Vec z = ft::stacked_power(plan);
    const double obj = qp.objective(z);
    for (int k = 0; k < 50; ++k) {
      Vec dir(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) dir[i] = rng.uniform(-1.0, 1.0);
      const Vec y = z + 1e-4 * dir.normalized();
      if (qp.max_violation(y) > 0.0) continue;
      CHECK(qp.objective(y) >= obj - 1e-6);
    }
  }
}

TEST_CASE("literal comfort band that cannot be held is reported as infeasible") {
  HvacSpec s;
  s.p_max = Vec::Constant(6, 0.2);
  s.t_prefer = Vec::Constant(6, 75.0);
  s.t_lower = Vec::Constant(6, 72.0);
  s.t_upper = Vec::Constant(6, 78.0);
  s.zeta1 = 0.18;
  s.zeta2 = 0.2;
  auto p = single(s, 6);
  p.weather = weather(6, 120.0);
  p.weather.t_in_0 = 77.0;
  p.relax_comfort = false;
  try {
    solve_household(p);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    REQUIRE(!e.binding().empty());
    CHECK(e.binding()[0].kind == DeviceKind::hvac);
    CHECK(e.binding()[0].constraint == ViolationKind::temperature_upper);
  }
  p.relax_comfort = true;
  CHECK_NOTHROW(solve_household(p));
}

TEST_CASE("price presence must match participation") {
  auto p = single(PvSpec{}, 4);
  p.prices = Vec::Zero(4);
  CHECK_THROWS(solve_household(p));
}

TEST_CASE("population solve is order-preserving and thread-independent") {
  Rng rng(8);
  std::vector<HouseholdProblem> problems;
  for (int i = 0; i < 12; ++i) problems.push_back(ft::random_household_problem(rng, 3, 2));
  problems.push_back(problems[0]);
  problems.push_back(problems[0]);
  const auto seq = solve_population(problems, {}, 1);
  const auto par = solve_population(problems, {}, 4);
  REQUIRE(seq.ok());
  REQUIRE(par.ok());
  for (std::size_t i = 0; i < problems.size(); ++i) {
    CHECK(seq.plans[i].net_power_kw == par.plans[i].net_power_kw);
    CHECK(seq.plans[i].net_power_kw == solve_household(problems[i]).net_power_kw);
  }
  CHECK(seq.plans[12].net_power_kw == seq.plans[0].net_power_kw);
  CHECK(seq.plans[13].net_power_kw == seq.plans[0].net_power_kw);

  // a batch equals the concatenation of its halves
  const std::vector<HouseholdProblem> a(problems.begin(), problems.begin() + 5), b(problems.begin() + 5, problems.end());
  const auto sa = solve_population(a), sb = solve_population(b);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(sa.plans[i].net_power_kw == seq.plans[i].net_power_kw);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(sb.plans[i].net_power_kw == seq.plans[i + 5].net_power_kw);
}

TEST_CASE("population solve collects failures without aborting") {
  Rng rng(8);
  std::vector<HouseholdProblem> problems{ft::random_household_problem(rng, 3, 1)};
  HvacSpec s;
  s.p_max = Vec::Constant(3, 0.1);
  s.t_prefer = Vec::Constant(3, 75.0);
  s.t_lower = Vec::Constant(3, 72.0);
  s.t_upper = Vec::Constant(3, 78.0);
  auto bad = single(s, 3);
  bad.household.id = 77;
  bad.weather = weather(3, 130.0);
  bad.weather.t_in_0 = 77.9;
  bad.relax_comfort = false;
  problems.push_back(bad);
  problems.push_back(problems[0]);
  const auto r = solve_population(problems, {}, 2);
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].index == 1);
  CHECK(r.failures[0].household_id == 77);
  CHECK(r.failures[0].infeasible);
  CHECK(r.plans[2].net_power_kw == r.plans[0].net_power_kw);
}
