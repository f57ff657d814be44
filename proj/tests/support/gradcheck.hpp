/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
// Central finite differences of the offline loss, one parameter block at a time.
#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <string>

#include "flexsig/pricing.hpp"
#include "flexsig/rng.hpp"

namespace flexsig::testing {

struct BlockError {
  std::string name;
  double rel_error = 0.0;  ///< ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-8)
};

inline std::array<BlockError, 6> offline_gradient_errors(const ClassifierParams& params,
                                                         const std::vector<Sample>& batch, const Hyperparams& hyper,
                                                         double step = 1e-5) {
  ParamGradient g;
  offline_loss_gradient(params, batch, hyper, g);
  ClassifierParams p = params;
  auto numeric = [&](auto& block) {
    Mat out(block.rows(), block.cols());
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
      for (Eigen::Index i = 0; i < block.rows(); ++i) {
        const double keep = block(i, j);
        block(i, j) = keep + step;
        const double up = offline_loss(p, batch, hyper).total;
        block(i, j) = keep - step;
        const double down = offline_loss(p, batch, hyper).total;
        block(i, j) = keep;
        out(i, j) = (up - down) / (2.0 * step);
      }
    }
    return out;
  };
  auto rel = [](const Mat& a, const Mat& n) {
    return (a - n).norm() / std::max({a.norm(), n.norm(), 1e-8});
  };
  return {BlockError{"w1", rel(g.w1, numeric(p.w1))}, BlockError{"b1", rel(Mat(g.b1), numeric(p.b1))},
          BlockError{"w2", rel(g.w2, numeric(p.w2))}, BlockError{"b2", rel(Mat(g.b2), numeric(p.b2))},
          BlockError{"mu_temp", rel(g.mu_temp, numeric(p.mu_temp))},
          BlockError{"mu_solar", rel(g.mu_solar, numeric(p.mu_solar))}};
}

/// Seeded random classifier and batch of the given sizes; weights are large
/// enough that the softmax is far from uniform.
inline std::pair<ClassifierParams, std::vector<Sample>> random_classifier_problem(std::uint64_t seed, int n, int k,
                                                                                  int hidden, int t) {
  Rng rng(seed);
  auto fill = [&](Mat& m, Eigen::Index r, Eigen::Index c, double s) {
    m.resize(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = s * rng.normal();
  };
  ClassifierParams p;
  Mat tmp;
  fill(p.w1, hidden, 2 * t, 0.3);
  fill(tmp, hidden, 1, 0.3);
  p.b1 = tmp.col(0);
  fill(p.w2, k, hidden, 0.8);
  fill(tmp, k, 1, 0.5);
  p.b2 = tmp.col(0);
  fill(p.mu_temp, t, k, 1.0);
  fill(p.mu_solar, t, k, 1.0);
  std::vector<Sample> batch;
  for (int i = 0; i < n; ++i) {
    Mat x;
    fill(x, 2 * t, 1, 1.0);
    Sample s;
    s.x = x.col(0);
    s.y_temp = s.x.head(t);
    s.y_solar = s.x.tail(t);
    batch.push_back(std::move(s));
  }
  return {std::move(p), std::move(batch)};
}

}  // namespace flexsig::testing
