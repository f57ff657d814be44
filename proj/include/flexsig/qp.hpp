/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace flexsig {

/// Sparse column of a constraint matrix: (row, value) pairs.
using SparseColumn = std::vector<std::pair<int, double>>;

/// minimize 0.5 * sum_j q_j x_j^2 + c^T x
/// subject to A x = b, lo <= x <= hi (infinite bounds allowed)
///
/// The Hessian is diagonal and nonnegative. Variables with lo == hi are held
/// fixed and removed before the interior-point iteration.
struct BoxQp {
  Eigen::VectorXd q;
  Eigen::VectorXd c;
  std::vector<SparseColumn> a_cols;  ///< one entry per variable
  Eigen::VectorXd b;                 ///< one entry per equality row
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  Eigen::VectorXd start;  ///< optional hint, clipped into the interior

  int n() const { return static_cast<int>(q.size()); }
  int m() const { return static_cast<int>(b.size()); }

  /// Appends a variable and returns its index.
  int add_variable(double q_j, double c_j, double lo_j, double hi_j, double start_j = 0.0);
  /// Appends an equality row with the given right-hand side and returns its index.
  int add_row(double rhs);
  void set(int row, int col, double value) { a_cols[static_cast<std::size_t>(col)].emplace_back(row, value); }

  static constexpr double inf = std::numeric_limits<double>::infinity();
};

struct QpOptions {
  int max_iter = 5000;
  double tol = 1e-6;
};

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd y;  ///< equality multipliers
  Eigen::VectorXd z_lo;
  Eigen::VectorXd z_hi;
  double kkt_residual = 0.0;  ///< max of stationarity, primal, complementarity (inf-norms)
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Primal-dual interior point with Mehrotra predictor-corrector. Deterministic.
QpResult solve_box_qp(const BoxQp& qp, const QpOptions& opts = {});

/// KKT residual of a candidate primal-dual point for `qp`.
double box_qp_kkt_residual(const BoxQp& qp, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& z_lo, const Eigen::VectorXd& z_hi);

}  // namespace flexsig
