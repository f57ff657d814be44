/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "flexsig/error.hpp"
#include "flexsig/pricing.hpp"
#include "flexsig/rng.hpp"
#include "gradcheck.hpp"

using namespace flexsig;
namespace fs = std::filesystem;

namespace {

Vec random_vec(Rng& rng, int n, double scale) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

Vec random_simplex(Rng& rng, int k) {
  Vec w(k);
  for (int j = 0; j < k; ++j) w[j] = -std::log(std::max(rng.uniform(), 1e-300));
  return w / w.sum();
}

ClassifierParams zero_classifier(int d_in, int hidden, int k, int t) {
  ClassifierParams p;
  p.w1 = Mat::Zero(hidden, d_in);
  p.b1 = Vec::Zero(hidden);
  p.w2 = Mat::Zero(k, hidden);
  p.b2 = Vec::Zero(k);
  p.mu_temp = Mat::Zero(t, k);
  p.mu_solar = Mat::Zero(t, k);
  p.normalization.mean = Vec::Zero(d_in);
  p.normalization.scale = Vec::Ones(d_in);
  return p;
}

}  // namespace

TEST_CASE("feedback step inside the set is the raw normalized step") {
  const SmoothnessMetric m(24, 9.0);
  Rng rng(1);
  PriceSignal a{random_vec(rng, 24, 0.01), 0};
  const Vec g = random_vec(rng, 24, 1.0).cwiseAbs();
  const auto r = feedback_update(a, g, 1e-3, m);
  CHECK(!r.zero_gradient);
  CHECK((r.alpha.values - (a.values + 1e-3 / g.norm() * g)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((r.alpha.values - a.values).norm() == doctest::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("flat demand from zero gives a constant price") {
  const SmoothnessMetric m(24, 9.0);
  const auto r = feedback_update(PriceSignal{Vec::Zero(24), 0}, Vec::Constant(24, 3.0), 5.0, m);
  const Vec v = r.alpha.values;
  CHECK((v.array() - v.mean()).abs().maxCoeff() < 1e-10);
  CHECK(v.mean() > 0.0);
  CHECK(m.contains(v));
}

TEST_CASE("zero demand leaves the price unchanged with a flag") {
  const SmoothnessMetric m(4, 9.0);
  PriceSignal a{Vec::Constant(4, 0.1), 3};
  const auto r = feedback_update(a, Vec::Zero(4), 0.1, m);
  CHECK(r.zero_gradient);
  CHECK(r.alpha.values == a.values);
}

TEST_CASE("repeated identical demand walks to the boundary and stays") {
  const SmoothnessMetric m(24, 9.0);
  Rng rng(2);
  const Vec g = random_vec(rng, 24, 1.0).cwiseAbs() + Vec::Constant(24, 0.5);
  PriceSignal a{Vec::Zero(24), 0};
  double last = 0.0;
  for (int i = 0; i < 60; ++i) {
    a = feedback_update(a, g, 0.1, m).alpha;
    const double n = m.dual_norm_sq(a.values);
    CHECK(n >= last - 1e-7);
    CHECK(n <= 1.0 + 1e-6);
    last = n;
  }
  CHECK(last == doctest::Approx(1.0).epsilon(1e-6));
  // the walk settles on the maximizer of g'a over the ellipsoid, K g / sqrt(g'K g)
  for (int i = 0; i < 3000; ++i) a = feedback_update(a, g, 0.1, m).alpha;
  const Vec star = m.K() * g / std::sqrt(g.dot(m.K() * g));
  CHECK((a.values - star).norm() < 1e-3 * star.norm());
}

TEST_CASE("classifier forward examples") {
  ClassifierParams p = zero_classifier(6, 4, 6, 3);
  Rng rng(3);
  const Vec x = random_vec(rng, 6, 1.0);
  const Vec w = classifier_forward(p, x);
  CHECK((w.array() - 1.0 / 6.0).abs().maxCoeff() < 1e-15);
  p.b2[0] = 10.0;
  CHECK(classifier_forward(p, x)[0] > 0.999);
  const auto [q, batch] = flexsig::testing::random_classifier_problem(4, 5, 6, 7, 3);
  for (const auto& s : batch) {
    const Vec v = classifier_forward(q, s.x);
    CHECK(std::abs(v.sum() - 1.0) < 1e-12);
    CHECK((v.array() > 0.0).all());
  }
}

TEST_CASE("classifier is permutation-equivariant") {
  auto [p, batch] = flexsig::testing::random_classifier_problem(5, 3, 4, 6, 3);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
  perm.indices() << 2, 0, 3, 1;
  ClassifierParams q = p;
  q.w2 = perm * p.w2;
  q.b2 = perm * p.b2;
  for (const auto& s : batch)
    CHECK((classifier_forward(q, s.x) - perm * classifier_forward(p, s.x)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("offline loss closed form: perfect reconstruction and uniform weights") {
  ClassifierParams p = zero_classifier(4, 3, 2, 2);
  p.mu_temp << 1, 3, 2, 0;
  p.mu_solar << -1, 1, 4, 2;
  Sample s;
  s.x = Vec::Ones(4);
  s.y_temp = p.mu_temp * Vec::Constant(2, 0.5);
  s.y_solar = p.mu_solar * Vec::Constant(2, 0.5);
  Hyperparams h;
  const auto l = offline_loss(p, {s}, h);
  CHECK(l.reconstruction == doctest::Approx(0.0));
  CHECK(l.entropy == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(l.contrast == 0.0);  // single sample: empty pair sum
  CHECK(l.total == doctest::Approx(h.lambda_entropy * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("contrast is zero for identical inputs") {
  ClassifierParams p = zero_classifier(4, 3, 2, 2);
  Sample s;
  s.x = Vec::Ones(4);
  s.y_temp = Vec::Zero(2);
  s.y_solar = Vec::Zero(2);
  const auto l = offline_loss(p, {s, s, s}, Hyperparams{});
  CHECK(l.contrast_degenerate);
  CHECK(l.contrast == 0.0);
}

TEST_CASE("contrast matches the pair-sum definition") {
  const auto [p, batch] = flexsig::testing::random_classifier_problem(6, 5, 3, 4, 3);
  double num = 0.0, den = 0.0;
  for (const auto& a : batch) {
    for (const auto& b : batch) {
      num += (classifier_forward(p, a.x) - classifier_forward(p, b.x)).squaredNorm();
      den += (a.x - b.x).squaredNorm();
    }
  }
  CHECK(offline_loss(p, batch, Hyperparams{}).contrast == doctest::Approx(-num / den).epsilon(1e-12));
}

TEST_CASE("analytic offline gradient matches finite differences") {
  Hyperparams h;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto [p, batch] = flexsig::testing::random_classifier_problem(seed, 6, 3, 5, 4);
    for (const auto& e : flexsig::testing::offline_gradient_errors(p, batch, h)) {
      INFO(e.name);
      CHECK(e.rel_error <= 1e-4);
    }
  }
}

TEST_CASE("offline training: determinism, descent, k = 1") {
  const TimeGrid g;
  const auto hist = synthesize_weather(Archetype::denver, 1, 40, 9, g);
  Hyperparams h;
  h.k = 3;
  h.hidden = 8;
  h.offline_epochs = 300;
  h.gamma_offline = 0.01;
  const auto a = offline_train(hist, h, 5), b = offline_train(hist, h, 5);
  CHECK(a.w1 == b.w1);
  CHECK(a.mu_temp == b.mu_temp);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.loss_trace.back() <= a.loss_trace.front());

  h.k = 1;
  h.offline_epochs = 2000;
  h.gamma_offline = 0.05;
  const auto one = offline_train(hist, h, 5);
  std::vector<Vec> raw;
  for (const auto& d : hist) raw.push_back(context_features(d));
  const auto samples = make_samples(hist, one.normalization);
  Vec mean = Vec::Zero(24);
  for (const auto& s : samples) mean += s.y_temp / static_cast<double>(samples.size());
  CHECK(classifier_forward(one, samples[0].x)[0] == 1.0);
  CHECK((one.mu_temp.col(0) - mean).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("offline training reduces reconstruction on k distinct days") {
  const TimeGrid g;
  Hyperparams h;
  h.k = 6;
  h.hidden = 10;
  h.offline_epochs = 3000;
  h.gamma_offline = 0.01;
  const auto hist = synthesize_weather(Archetype::phoenix, 100, h.k, 4, g);
  std::vector<Vec> raw;
  for (const auto& d : hist) raw.push_back(context_features(d));
  const auto norm = fit_normalization(raw);
  const auto samples = make_samples(hist, norm);
  const auto start = offline_loss(init_classifier(samples, norm, h, 5), samples, h);
  const auto trained = offline_train(hist, h, 5);
  CHECK(offline_loss(trained, samples, h).reconstruction <= 0.5 * start.reconstruction);
}

TEST_CASE("cluster price and update") {
  const SmoothnessMetric m(24, 9.0);
  Rng rng(7);
  Mat kappa(24, 3);
  for (int j = 0; j < 3; ++j) kappa.col(j) = random_vec(rng, 24, 1.0);
  ClusterBank bank(project_cluster_bank(kappa, m), m);
  CHECK(cluster_price(bank, Vec::Unit(3, 1)).values == bank.kappa.col(1));
  for (int s = 0; s < 200; ++s) CHECK(m.dual_norm_sq(cluster_price(bank, random_simplex(rng, 3)).values) <= 1 + 1e-6);
  CHECK_THROWS_AS(cluster_price(bank, Vec::Constant(3, 0.5)), ValidationError);

  ClusterBank same(Mat(24, 2), m);
  same.kappa.col(0) = bank.kappa.col(0);
  same.kappa.col(1) = bank.kappa.col(0);
  CHECK((cluster_price(same, random_simplex(rng, 2)).values - bank.kappa.col(0)).norm() < 1e-14);

  const Vec g = random_vec(rng, 24, 1.0).cwiseAbs();
  const auto up = cluster_update(bank, Vec::Unit(3, 0), g, 0.5);
  CHECK(up.bank.kappa.col(1) == bank.kappa.col(1));
  CHECK(up.bank.kappa.col(2) == bank.kappa.col(2));
  CHECK(up.bank.kappa.col(0) != bank.kappa.col(0));
  for (int j = 0; j < 3; ++j) CHECK(m.dual_norm_sq(up.bank.kappa.col(j)) <= 1 + 1e-6);
  CHECK(cluster_update(bank, Vec::Unit(3, 0), Vec::Zero(24), 0.5).zero_gradient);
}

TEST_CASE("single-cluster updates reproduce feedback updates exactly") {
  const SmoothnessMetric m(24, 9.0);
  Rng rng(8);
  ClusterBank bank = ClusterBank::zeros(24, 1, m);
  PriceSignal a{Vec::Zero(24), 0};
  for (int day = 0; day < 30; ++day) {
    const Vec g = random_vec(rng, 24, 1.0).cwiseAbs();
    a = feedback_update(a, g, 0.1, m).alpha;
    bank = cluster_update(bank, Vec::Ones(1), g, 0.1).bank;
    CHECK(cluster_price(bank, Vec::Ones(1)).values == a.values);
  }
}

TEST_CASE("TOU signals") {
  const TimeGrid g;
  TouSchedule one;
  one.tiers.push_back({"flat", 0.2, {{0.0, 24.0}}});
  CHECK((tou_signal(one, g).values.array() == 0.2).all());

  const Vec v = tou_signal(TouSchedule::three_tier(), g).values;
  std::vector<double> distinct(v.data(), v.data() + v.size());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  CHECK(distinct.size() == 3);
  for (int t = 1; t < 24; ++t) {
    if (v[t] != v[t - 1]) CHECK((t == 13 || t == 15 || t == 19));
  }
  CHECK(tou_signal(TouSchedule::three_tier(), g).values == v);

  TouSchedule overlap;
  overlap.tiers.push_back({"a", 0.1, {{0.0, 14.0}}});
  overlap.tiers.push_back({"b", 0.2, {{13.0, 24.0}}});
  CHECK_THROWS_AS(overlap.validate(), ConfigError);
}

TEST_CASE("checkpoint round trip") {
  const TimeGrid g;
  const auto hist = synthesize_weather(Archetype::denver, 1, 20, 9, g);
  Hyperparams h;
  h.k = 3;
  h.hidden = 5;
  h.offline_epochs = 20;
  const auto p = offline_train(hist, h, 5);
  Rng rng(1);
  Mat kappa(24, 3);
  for (int j = 0; j < 3; ++j) kappa.col(j) = random_vec(rng, 24, 0.1);
  const fs::path path = fs::temp_directory_path() / "flexsig_test_checkpoint.json";
  save_checkpoint(path, p, h, kappa);
  const auto c = load_checkpoint(path);
  CHECK((c.params.w1 - p.w1).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((c.params.mu_solar - p.mu_solar).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((c.params.normalization.scale - p.normalization.scale).cwiseAbs().maxCoeff() <= 1e-12);
  REQUIRE(c.kappa.has_value());
  CHECK((*c.kappa - kappa).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(c.hyper.k == 3);
  const Vec x = random_vec(rng, 48, 1.0);
  CHECK((classifier_forward(c.params, x) - classifier_forward(p, x)).cwiseAbs().maxCoeff() <= 1e-12);

  std::ofstream(path) << "{\"format\": \"something-else\"}";
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);
}
