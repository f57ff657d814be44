/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include <doctest.h>

#include "flexsig/qp.hpp"
#include "flexsig/rng.hpp"
#include "oracles.hpp"

using namespace flexsig;
using flexsig::testing::DenseQp;

TEST_CASE("unconstrained diagonal QP") {
  BoxQp qp;
  qp.add_variable(2.0, -4.0, -BoxQp::inf, BoxQp::inf);
  qp.add_variable(1.0, 3.0, -BoxQp::inf, BoxQp::inf);
  const auto r = solve_box_qp(qp);
  REQUIRE(r.converged);
  CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(r.x[1] == doctest::Approx(-3.0).epsilon(1e-8));
}

TEST_CASE("active bounds and an equality row") {
  // min x0^2 + x1^2 s.t. x0 + x1 = 3, x0 <= 1
  BoxQp qp;
  const int a = qp.add_variable(2.0, 0.0, -BoxQp::inf, 1.0);
  const int b = qp.add_variable(2.0, 0.0, -BoxQp::inf, BoxQp::inf);
  const int row = qp.add_row(3.0);
  qp.set(row, a, 1.0);
  qp.set(row, b, 1.0);
  const auto r = solve_box_qp(qp);
  REQUIRE(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.x[1] == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(r.kkt_residual <= 1e-6);
  CHECK(box_qp_kkt_residual(qp, r.x, r.y, r.z_lo, r.z_hi) <= 1e-6);
}

TEST_CASE("fixed variables are honored") {
  BoxQp qp;
  qp.add_variable(1.0, 5.0, 2.0, 2.0);
  const int b = qp.add_variable(1.0, 0.0, 0.0, 10.0);
  const int row = qp.add_row(5.0);
  qp.set(row, 0, 1.0);
  qp.set(row, b, 1.0);
  const auto r = solve_box_qp(qp);
  REQUIRE(r.converged);
  CHECK(r.x[0] == 2.0);
  CHECK(r.x[1] == doctest::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("linear variables with a zero Hessian") {
  // min x0 - x1 over the unit box with x0 + x1 = 1: vertex (0, 1)
  BoxQp qp;
  qp.add_variable(0.0, 1.0, 0.0, 1.0);
  qp.add_variable(0.0, -1.0, 0.0, 1.0);
  const int row = qp.add_row(1.0);
  qp.set(row, 0, 1.0);
  qp.set(row, 1, 1.0);
  const auto r = solve_box_qp(qp);
  REQUIRE(r.converged);
  CHECK(std::abs(r.x[0]) < 1e-6);
  CHECK(std::abs(r.x[1] - 1.0) < 1e-6);
}

TEST_CASE("random box QPs agree with active-set enumeration") {
  Rng rng(21);
  for (int rep = 0; rep < 60; ++rep) {
    const int n = 2 + static_cast<int>(rng.index(4));
    const int m = static_cast<int>(rng.index(2));
    BoxQp qp;
    DenseQp ref(n);
    Vec x0(n);  // a feasible point keeps the instance feasible
    for (int j = 0; j < n; ++j) {
      const double q = rng.uniform(0.1, 3.0), c = rng.uniform(-3.0, 3.0);
      const double lo = rng.uniform(-2.0, 0.0), hi = rng.uniform(0.0, 2.0);
      qp.add_variable(q, c, lo, hi);
      ref.q(j, j) = q;
      ref.c[j] = c;
      Vec e = Vec::Zero(n);
      e[j] = 1.0;
      ref.add_range(e, lo, hi);
      x0[j] = rng.uniform(lo, hi);
    }
    for (int i = 0; i < m; ++i) {
      Vec row(n);
      for (int j = 0; j < n; ++j) row[j] = rng.uniform(-1.0, 1.0);
      const int r = qp.add_row(row.dot(x0));
      for (int j = 0; j < n; ++j) qp.set(r, j, row[j]);
      ref.add_eq(row, row.dot(x0));
    }
    const auto sol = solve_box_qp(qp);
    REQUIRE(sol.converged);
    const auto exact = flexsig::testing::active_set_minimum(ref);
    REQUIRE(exact.has_value());
    CHECK(std::abs(ref.objective(sol.x) - ref.objective(*exact)) < 1e-6);
    CHECK(ref.max_violation(sol.x) < 1e-6);
  }
}

TEST_CASE("the solver is deterministic") {
  BoxQp qp;
  Rng rng(2);
  for (int j = 0; j < 10; ++j) qp.add_variable(rng.uniform(0.0, 1.0), rng.uniform(-1, 1), -1.0, 1.0);
  const int row = qp.add_row(0.5);
  for (int j = 0; j < 10; ++j) qp.set(row, j, 1.0);
  const auto a = solve_box_qp(qp), b = solve_box_qp(qp);
  CHECK(a.x == b.x);
  CHECK(a.iterations == b.iterations);
}
