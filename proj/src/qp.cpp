/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "flexsig/qp.hpp"

#include <algorithm>
#include <cmath>

namespace flexsig {

int BoxQp::add_variable(double q_j, double c_j, double lo_j, double hi_j, double start_j) {
  const Eigen::Index k = q.size();
  q.conservativeResize(k + 1);
  c.conservativeResize(k + 1);
  lo.conservativeResize(k + 1);
  hi.conservativeResize(k + 1);
  start.conservativeResize(k + 1);
  q[k] = q_j;
  c[k] = c_j;
  lo[k] = lo_j;
  hi[k] = hi_j;
  start[k] = start_j;
  a_cols.emplace_back();
  return static_cast<int>(k);
}

int BoxQp::add_row(double rhs) {
  const Eigen::Index k = b.size();
  b.conservativeResize(k + 1);
  b[k] = rhs;
  return static_cast<int>(k);
}

namespace {

using Eigen::VectorXd;

bool is_fixed(double lo, double hi) {
  return std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-12 * std::max(1.0, std::abs(lo));
}

// Residual vectors shared by the iteration and the post-hoc check.
struct Residuals {
  VectorXd rd;
  VectorXd rp;
};

Residuals residuals(const BoxQp& qp, const VectorXd& x, const VectorXd& y, const VectorXd& zl,
                    const VectorXd& zu) {
  Residuals r;
  r.rd = qp.q.cwiseProduct(x) + qp.c - zl + zu;
  r.rp = -qp.b;
  for (int j = 0; j < qp.n(); ++j) {
    for (const auto& [row, v] : qp.a_cols[static_cast<std::size_t>(j)]) {
      r.rd[j] -= v * y[row];
      r.rp[row] += v * x[j];
    }
  }
  return r;
}

}  // namespace

double box_qp_kkt_residual(const BoxQp& qp, const VectorXd& x, const VectorXd& y, const VectorXd& zl,
                           const VectorXd& zu) {
  const Residuals r = residuals(qp, x, y, zl, zu);
  double res = std::max(r.rd.size() ? r.rd.lpNorm<Eigen::Infinity>() : 0.0,
                        r.rp.size() ? r.rp.lpNorm<Eigen::Infinity>() : 0.0);
  for (int j = 0; j < qp.n(); ++j) {
    if (std::isfinite(qp.lo[j])) {
      res = std::max({res, qp.lo[j] - x[j], std::abs((x[j] - qp.lo[j]) * zl[j]), -zl[j]});
    } else {
      res = std::max(res, std::abs(zl[j]));
    }
    if (std::isfinite(qp.hi[j])) {
      res = std::max({res, x[j] - qp.hi[j], std::abs((qp.hi[j] - x[j]) * zu[j]), -zu[j]});
    } else {
      res = std::max(res, std::abs(zu[j]));
    }
  }
  return res;
}

QpResult solve_box_qp(const BoxQp& qp, const QpOptions& opts) {
  const int n_all = qp.n();
  const int m = qp.m();

  // Remove fixed variables.
  std::vector<int> free_idx;
  VectorXd x_all = VectorXd::Zero(n_all);
  VectorXd b = qp.b;
  for (int j = 0; j < n_all; ++j) {
    if (is_fixed(qp.lo[j], qp.hi[j])) {
      x_all[j] = qp.lo[j];
      for (const auto& [row, v] : qp.a_cols[static_cast<std::size_t>(j)]) b[row] -= v * qp.lo[j];
    } else {
      free_idx.push_back(j);
    }
  }
  const int n = static_cast<int>(free_idx.size());
  VectorXd q(n), c(n), lo(n), hi(n);
  std::vector<const SparseColumn*> cols(static_cast<std::size_t>(n));
  std::vector<char> has_lo(static_cast<std::size_t>(n)), has_hi(static_cast<std::size_t>(n));
  VectorXd x(n);
  int n_comp = 0;
  for (int k = 0; k < n; ++k) {
    const int j = free_idx[static_cast<std::size_t>(k)];
    q[k] = qp.q[j];
    c[k] = qp.c[j];
    lo[k] = qp.lo[j];
    hi[k] = qp.hi[j];
    cols[static_cast<std::size_t>(k)] = &qp.a_cols[static_cast<std::size_t>(j)];
    has_lo[static_cast<std::size_t>(k)] = std::isfinite(lo[k]);
    has_hi[static_cast<std::size_t>(k)] = std::isfinite(hi[k]);
    n_comp += has_lo[static_cast<std::size_t>(k)] + has_hi[static_cast<std::size_t>(k)];
    const double s = qp.start.size() == n_all ? qp.start[j] : 0.0;
    if (has_lo[static_cast<std::size_t>(k)] && has_hi[static_cast<std::size_t>(k)]) {
      const double w = hi[k] - lo[k];
      x[k] = lo[k] + w * std::clamp((s - lo[k]) / w, 0.1, 0.9);
    } else if (has_lo[static_cast<std::size_t>(k)]) {
      x[k] = std::max(s, lo[k] + 1.0);
    } else if (has_hi[static_cast<std::size_t>(k)]) {
      x[k] = std::min(s, hi[k] - 1.0);
    } else {
      x[k] = s;
    }
  }

  VectorXd y = VectorXd::Zero(m);
  VectorXd zl(n), zu(n), sl(n), su(n);
  for (int k = 0; k < n; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    zl[k] = has_lo[ks] ? 1.0 : 0.0;
    zu[k] = has_hi[ks] ? 1.0 : 0.0;
  }

  auto slacks = [&] {
    for (int k = 0; k < n; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      sl[k] = has_lo[ks] ? x[k] - lo[k] : 1.0;
      su[k] = has_hi[ks] ? hi[k] - x[k] : 1.0;
    }
  };

  VectorXd rd(n), rp(m), h(n), dx(n), dy(m), dzl(n), dzu(n);
  Eigen::MatrixXd schur(m, m);
  Eigen::LLT<Eigen::MatrixXd> llt;

  auto compute_residuals = [&] {
    rd = q.cwiseProduct(x) + c - zl + zu;
    rp = -b;
    for (int k = 0; k < n; ++k) {
      for (const auto& [row, v] : *cols[static_cast<std::size_t>(k)]) {
        rd[k] -= v * y[row];
        rp[row] += v * x[k];
      }
    }
  };

  // Solves the Newton system for complementarity targets tl, tu.
  auto newton = [&](const VectorXd& tl, const VectorXd& tu) {
    VectorXd r1 = -rd;
    for (int k = 0; k < n; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      if (has_lo[ks]) r1[k] += tl[k] / sl[k] - zl[k];
      if (has_hi[ks]) r1[k] += -tu[k] / su[k] + zu[k];
    }
    VectorXd rhs = -rp;
    for (int k = 0; k < n; ++k) {
      const double t = r1[k] / h[k];
      for (const auto& [row, v] : *cols[static_cast<std::size_t>(k)]) rhs[row] -= v * t;
    }
    dy = m > 0 ? VectorXd(llt.solve(rhs)) : VectorXd();
    for (int k = 0; k < n; ++k) {
      double acc = r1[k];
      for (const auto& [row, v] : *cols[static_cast<std::size_t>(k)]) acc += v * dy[row];
      dx[k] = acc / h[k];
      const auto ks = static_cast<std::size_t>(k);
      dzl[k] = has_lo[ks] ? tl[k] / sl[k] - zl[k] - zl[k] * dx[k] / sl[k] : 0.0;
      dzu[k] = has_hi[ks] ? tu[k] / su[k] - zu[k] + zu[k] * dx[k] / su[k] : 0.0;
    }
  };

  // Largest primal and dual step lengths that keep the iterate interior.
  auto max_steps = [&] {
    double ap = 1.0, ad = 1.0;
    for (int k = 0; k < n; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      if (has_lo[ks]) {
        if (dx[k] < 0.0) ap = std::min(ap, -sl[k] / dx[k]);
        if (dzl[k] < 0.0) ad = std::min(ad, -zl[k] / dzl[k]);
      }
      if (has_hi[ks]) {
        if (dx[k] > 0.0) ap = std::min(ap, su[k] / dx[k]);
        if (dzu[k] < 0.0) ad = std::min(ad, -zu[k] / dzu[k]);
      }
    }
    return std::pair{ap, ad};
  };
  QpResult result;
  double best = std::numeric_limits<double>::infinity();
  VectorXd best_x = x, best_y = y, best_zl = zl, best_zu = zu;
  VectorXd tl(n), tu(n);
  int iter = 0;
  for (;; ++iter) {
    slacks();
    compute_residuals();
    double comp = 0.0, comp_max = 0.0;
    for (int k = 0; k < n; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      if (has_lo[ks]) {
        comp += sl[k] * zl[k];
        comp_max = std::max(comp_max, sl[k] * zl[k]);
      }
      if (has_hi[ks]) {
        comp += su[k] * zu[k];
        comp_max = std::max(comp_max, su[k] * zu[k]);
      }
    }
    const double mu = n_comp ? comp / n_comp : 0.0;
    const double res = std::max({n ? rd.lpNorm<Eigen::Infinity>() : 0.0, m ? rp.lpNorm<Eigen::Infinity>() : 0.0,
                                 comp_max});
    if (!std::isfinite(res)) {
      result.message = "non-finite iterate";
      break;
    }
    if (res < best) {
      best = res;
      best_x = x;
      best_y = y;
      best_zl = zl;
      best_zu = zu;
    }
    // Converge a little past the tolerance so reassembled quantities keep margin.
    if (res <= 0.1 * opts.tol) {
      result.converged = true;
      break;
    }
    if (iter >= opts.max_iter) {
      result.message = "iteration limit reached";
      break;
    }

    for (int k = 0; k < n; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      h[k] = q[k] + (has_lo[ks] ? zl[k] / sl[k] : 0.0) + (has_hi[ks] ? zu[k] / su[k] : 0.0);
      h[k] = std::max(h[k], 1e-14);
    }
    if (m > 0) {
      schur.setZero();
      for (int k = 0; k < n; ++k) {
        const auto& col = *cols[static_cast<std::size_t>(k)];
        const double inv = 1.0 / h[k];
        for (const auto& [r1, v1] : col) {
          for (const auto& [r2, v2] : col) schur(r1, r2) += v1 * v2 * inv;
        }
      }
      llt.compute(schur);
      if (llt.info() != Eigen::Success) {
        const double reg = 1e-12 * std::max(1.0, schur.diagonal().maxCoeff());
        schur.diagonal().array() += reg;
        llt.compute(schur);
        if (llt.info() != Eigen::Success) {
          result.message = "singular reduced system";
          break;
        }
      }
    }

    // predictor
    tl.setZero();
    tu.setZero();
    newton(tl, tu);
    const auto [ap_aff, ad_aff] = max_steps();
    double sigma = 0.0;
    if (n_comp) {
      double mu_aff = 0.0;
      for (int k = 0; k < n; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        if (has_lo[ks]) mu_aff += (sl[k] + ap_aff * dx[k]) * (zl[k] + ad_aff * dzl[k]);
        if (has_hi[ks]) mu_aff += (su[k] - ap_aff * dx[k]) * (zu[k] + ad_aff * dzu[k]);
      }
      mu_aff /= n_comp;
      sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3.0);
      sigma = std::min(sigma, 1.0);
    }
    // corrector
    for (int k = 0; k < n; ++k) {
      tl[k] = sigma * mu - dx[k] * dzl[k];
      tu[k] = sigma * mu + dx[k] * dzu[k];
    }
    newton(tl, tu);
    const auto [ap, ad] = max_steps();
    // Separate primal and dual lengths: a common step stalls on nearly
    // linear variables whose bound multipliers must vanish.
    const double step_p = std::min(1.0, 0.995 * ap);
    const double step_d = std::min(1.0, 0.995 * ad);
    x += step_p * dx;
    y += step_d * dy;
    zl += step_d * dzl;
    zu += step_d * dzu;
    for (int k = 0; k < n; ++k) {
      // guard against rounding pushing an iterate onto its bound
      const auto ks = static_cast<std::size_t>(k);
      if (has_lo[ks]) x[k] = std::max(x[k], std::nextafter(lo[k], hi[k]));
      if (has_hi[ks]) x[k] = std::min(x[k], std::nextafter(hi[k], lo[k]));
    }
  }
  if (!result.converged) {
    x = best_x;
    y = best_y;
    zl = best_zl;
    zu = best_zu;
  }

  result.iterations = iter;
  result.x = x_all;
  result.y = y;
  result.z_lo = VectorXd::Zero(n_all);
  result.z_hi = VectorXd::Zero(n_all);
  for (int k = 0; k < n; ++k) {
    const int j = free_idx[static_cast<std::size_t>(k)];
    result.x[j] = x[k];
    result.z_lo[j] = zl[k];
    result.z_hi[j] = zu[k];
  }
  // Multipliers of fixed variables absorb their stationarity residual.
  const Residuals r = residuals(qp, result.x, result.y, result.z_lo, result.z_hi);
  for (int j = 0; j < n_all; ++j) {
    if (!is_fixed(qp.lo[j], qp.hi[j])) continue;
    if (r.rd[j] > 0.0) {
      result.z_lo[j] = r.rd[j];
    } else {
      result.z_hi[j] = -r.rd[j];
    }
  }
  result.kkt_residual = box_qp_kkt_residual(qp, result.x, result.y, result.z_lo, result.z_hi);
  if (result.converged && result.kkt_residual > opts.tol) {
    result.converged = false;
    result.message = "residual above tolerance after reassembly";
  }
  return result;
}

}  // namespace flexsig
