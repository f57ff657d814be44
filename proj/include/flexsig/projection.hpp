/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <Eigen/Dense>

#include "flexsig/devices.hpp"

namespace flexsig {

/// Circular first-difference operator: (D p)_i = p_{i+1} - p_i, wrapping at the end.
Mat circular_difference(int dim);

/// Quadratic metric K = I + lambda * D^T D of the price constraint set
/// A = { z : z^T K^{-1} z <= 1 }. Factored once at construction.
class SmoothnessMetric {
public:
  SmoothnessMetric(int dim, double lambda);

  int dim() const { return dim_; }
  double lambda() const { return lambda_; }
  const Mat& K() const { return k_; }
  const Vec& eigenvalues() const { return eigval_; }
  const Mat& eigenvectors() const { return eigvec_; }

  Vec solve(const Vec& z) const;     ///< K^{-1} z
  double dual_norm_sq(const Vec& z) const;  ///< z^T K^{-1} z
  bool contains(const Vec& z, double tol = 1e-6) const { return dual_norm_sq(z) <= 1.0 + tol; }

private:
  int dim_;
  double lambda_;
  Mat k_;
  Eigen::LLT<Mat> llt_;
  Vec eigval_;
  Mat eigvec_;
};

/// Euclidean projection onto { x : ||x||_1 <= radius } by sort-and-threshold.
Vec project_l1_ball(const Vec& z, double radius);

struct EllipsoidProjection {
  Vec x;
  double mu = 0.0;  ///< multiplier: x = (I + mu K^{-1})^{-1} z
  int iterations = 0;
};

/// Euclidean projection onto { x : x^T K^{-1} x <= 1 } with the multiplier
/// located by bisection. Throws NumericError if no bracket is found.
EllipsoidProjection project_ellipsoid_detail(const Vec& z, const SmoothnessMetric& metric);

inline Vec project_ellipsoid(const Vec& z, const SmoothnessMetric& metric) {
  return project_ellipsoid_detail(z, metric).x;
}

/// Column-wise ellipsoid projection of a d x k price bank.
Mat project_cluster_bank(const Mat& bank, const SmoothnessMetric& metric);

}  // namespace flexsig
