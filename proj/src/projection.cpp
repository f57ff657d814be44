/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "flexsig/projection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "flexsig/error.hpp"

namespace flexsig {

Mat circular_difference(int dim) {
  Mat d = Mat::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    d(i, i) -= 1.0;
    d(i, (i + 1) % dim) += 1.0;
  }
  return d;
}

SmoothnessMetric::SmoothnessMetric(int dim, double lambda) : dim_(dim), lambda_(lambda) {
  if (dim < 1) throw ConfigError("metric.dim", "must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("metric.lambda", "must be nonnegative");
  k_ = Mat::Identity(dim, dim);
  if (lambda > 0.0) {
    const Mat d = circular_difference(dim);
    k_.noalias() += lambda * d.transpose() * d;
  }
  llt_.compute(k_);
  if (llt_.info() != Eigen::Success) throw NumericError("smoothness metric is not positive definite");
  Eigen::SelfAdjointEigenSolver<Mat> es(k_);
  eigval_ = es.eigenvalues();
  eigvec_ = es.eigenvectors();
}

Vec SmoothnessMetric::solve(const Vec& z) const { return llt_.solve(z); }

double SmoothnessMetric::dual_norm_sq(const Vec& z) const { return z.dot(llt_.solve(z)); }

Vec project_l1_ball(const Vec& z, double radius) {
  if (!(radius > 0.0)) throw ValidationError("project_l1_ball: radius must be positive");
  if (z.lpNorm<1>() <= radius) return z;
  std::vector<double> u(z.data(), z.data() + z.size());
  for (auto& v : u) v = std::abs(v);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - radius) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  Vec x(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double mag = std::max(std::abs(z[i]) - theta, 0.0);
    x[i] = z[i] < 0.0 ? -mag : mag;
  }
  return x;
}

EllipsoidProjection project_ellipsoid_detail(const Vec& z, const SmoothnessMetric& metric) {
  if (z.size() != metric.dim()) throw ValidationError("project_ellipsoid: dimension mismatch");
  EllipsoidProjection out;
  if (metric.dual_norm_sq(z) <= 1.0) {
    out.x = z;
    return out;
  }
  const Vec& lam = metric.eigenvalues();
  const Vec zh = metric.eigenvectors().transpose() * z;
  // f(mu) = x(mu)^T K^{-1} x(mu) in the eigenbasis; decreasing in mu
  auto f = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < zh.size(); ++i) {
      const double r = lam[i] + mu;
      s += zh[i] * zh[i] * lam[i] / (r * r);
    }
    return s;
  };
  double lo = 0.0, hi = 1.0;
  int doublings = 0;
  while (f(hi) > 1.0) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 200) throw NumericError("project_ellipsoid: no bracket after 200 doublings");
  }
  int it = 0;
  double f_hi = f(hi);
  while (std::abs(f_hi - 1.0) > 1e-12 && it < 200) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = f(mid);
    if (f_mid > 1.0) {
      lo = mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
    ++it;
  }
  Vec xh(zh.size());
  for (Eigen::Index i = 0; i < zh.size(); ++i) xh[i] = zh[i] * lam[i] / (lam[i] + hi);
  out.x = metric.eigenvectors() * xh;
  out.mu = hi;
  out.iterations = it;
  return out;
}

Mat project_cluster_bank(const Mat& bank, const SmoothnessMetric& metric) {
  Mat out(bank.rows(), bank.cols());
  for (Eigen::Index j = 0; j < bank.cols(); ++j) out.col(j) = project_ellipsoid(bank.col(j), metric);
  return out;
}

}  // namespace flexsig
