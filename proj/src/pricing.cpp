/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "flexsig/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "flexsig/error.hpp"
#include "flexsig/rng.hpp"

namespace flexsig {

namespace {

constexpr double kLogFloor = 1e-12;

// Column-wise softmax with max subtraction.
Mat softmax_cols(const Mat& z) {
  Mat w(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const double mx = z.col(c).maxCoeff();
    double s = 0.0;
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      w(r, c) = std::exp(z(r, c) - mx);
      s += w(r, c);
    }
    w.col(c) /= s;
  }
  return w;
}

struct Batch {
  Mat x, yt, ys;
};

Batch stack(const std::vector<Sample>& batch) {
  if (batch.empty()) throw ValidationError("offline loss: empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  Batch b;
  b.x.resize(batch[0].x.size(), n);
  b.yt.resize(batch[0].y_temp.size(), n);
  b.ys.resize(batch[0].y_solar.size(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = batch[static_cast<std::size_t>(i)];
    b.x.col(i) = s.x;
    b.yt.col(i) = s.y_temp;
    b.ys.col(i) = s.y_solar;
  }
  return b;
}

// Sum over ordered pairs of squared distances between columns: 2n * sum ||c_i - mean||^2.
double pairwise_spread(const Mat& cols) {
  const double n = static_cast<double>(cols.cols());
  const Vec mean = cols.rowwise().mean();
  return 2.0 * n * (cols.colwise() - mean).squaredNorm();
}

struct Forward {
  Mat h, w, rt, rs;
  LossBreakdown loss;
  double spread_x = 0.0;
};

Forward forward(const ClassifierParams& p, const Batch& b, const Hyperparams& hyper) {
  const double n = static_cast<double>(b.x.cols());
  Forward f;
  f.h = ((p.w1 * b.x).colwise() + p.b1).array().tanh().matrix();
  f.w = softmax_cols((p.w2 * f.h).colwise() + p.b2);
  f.rt = p.mu_temp * f.w - b.yt;
  f.rs = p.mu_solar * f.w - b.ys;
  auto& l = f.loss;
  l.reconstruction = (f.rt.squaredNorm() + f.rs.squaredNorm()) / n;
  double ent = 0.0;
  for (Eigen::Index c = 0; c < f.w.cols(); ++c) {
    for (Eigen::Index r = 0; r < f.w.rows(); ++r) {
      const double v = f.w(r, c);
      ent -= v * std::log(std::max(v, kLogFloor));
    }
  }
  l.entropy = ent / n;
  f.spread_x = pairwise_spread(b.x);
  if (f.spread_x > 0.0) {
    l.contrast = -pairwise_spread(f.w) / f.spread_x;
  } else {
    l.contrast = 0.0;
    l.contrast_degenerate = true;
  }
  l.total = l.reconstruction + hyper.lambda_entropy * l.entropy + hyper.lambda_contrast * l.contrast;
  return f;
}

void check_shapes(const ClassifierParams& p, const std::vector<Sample>& batch) {
  if (p.w1.rows() != p.b1.size() || p.w2.cols() != p.w1.rows() || p.w2.rows() != p.b2.size() ||
      p.mu_temp.cols() != p.b2.size() || p.mu_solar.cols() != p.b2.size())
    throw ValidationError("classifier: inconsistent parameter shapes");
  for (const auto& s : batch) {
    if (s.x.size() != p.w1.cols() || s.y_temp.size() != p.mu_temp.rows() || s.y_solar.size() != p.mu_solar.rows())
      throw ValidationError("classifier: sample dimensions do not match parameters");
  }
}

}  // namespace

void Hyperparams::validate() const {
  if (k < 1) throw ConfigError("pricing.k", "must be at least 1");
  if (hidden < 1) throw ConfigError("pricing.hidden", "must be at least 1");
  if (d_in < 2 || d_in % 2 != 0) throw ConfigError("pricing.d_in", "must be a positive even number");
  if (!(eta_base > 0.0)) throw ConfigError("pricing.eta_base", "must be positive");
  if (!(lambda_l2 > 0.0)) throw ConfigError("pricing.lambda_l2", "must be positive");
  if (!(lambda_variation >= 0.0)) throw ConfigError("pricing.lambda_variation", "must be nonnegative");
  if (!(gamma_offline > 0.0)) throw ConfigError("pricing.gamma_offline", "must be positive");
  if (offline_epochs < 1) throw ConfigError("pricing.offline_epochs", "must be at least 1");
}

Vec context_features(const WeatherDay& day) {
  Vec x(day.temperature_f.size() + day.irradiance_w_m2.size());
  x << day.temperature_f, day.irradiance_w_m2;
  return x;
}

FeatureNormalization fit_normalization(const std::vector<Vec>& raw) {
  if (raw.empty()) throw ValidationError("fit_normalization: no samples");
  const Eigen::Index d = raw[0].size();
  FeatureNormalization norm;
  norm.mean = Vec::Zero(d);
  for (const auto& r : raw) norm.mean += r;
  norm.mean /= static_cast<double>(raw.size());
  Vec var = Vec::Zero(d);
  for (const auto& r : raw) var += (r - norm.mean).cwiseAbs2();
  var /= static_cast<double>(raw.size());
  norm.scale.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double sd = std::sqrt(var[i]);
    norm.scale[i] = sd > 1e-9 ? sd : 1.0;
  }
  return norm;
}

Vec classifier_forward(const ClassifierParams& params, const Vec& x) {
  const Vec h = (params.w1 * x + params.b1).array().tanh().matrix();
  const Vec z = params.w2 * h + params.b2;
  return softmax_cols(z).col(0);
}

Vec cluster_weights(const ClassifierParams& params, const WeatherDay& forecast) {
  const Vec raw = context_features(forecast);
  if (raw.size() != params.d_in()) throw ValidationError("cluster_weights: context dimension mismatch");
  return classifier_forward(params, params.normalization.apply(raw));
}

std::vector<Sample> make_samples(const std::vector<WeatherDay>& days, const FeatureNormalization& norm) {
  std::vector<Sample> out;
  out.reserve(days.size());
  for (const auto& d : days) {
    Sample s;
    s.x = norm.apply(context_features(d));
    const Eigen::Index t = d.temperature_f.size();
    s.y_temp = s.x.head(t);
    s.y_solar = s.x.tail(s.x.size() - t);
    out.push_back(std::move(s));
  }
  return out;
}

LossBreakdown offline_loss(const ClassifierParams& params, const std::vector<Sample>& batch,
                           const Hyperparams& hyper) {
  check_shapes(params, batch);
  return forward(params, stack(batch), hyper).loss;
}

LossBreakdown offline_loss_gradient(const ClassifierParams& params, const std::vector<Sample>& batch,
                                    const Hyperparams& hyper, ParamGradient& grad) {
  check_shapes(params, batch);
  const Batch b = stack(batch);
  const Forward f = forward(params, b, hyper);
  const double n = static_cast<double>(b.x.cols());

  Mat dw = (2.0 / n) * (params.mu_temp.transpose() * f.rt + params.mu_solar.transpose() * f.rs);
  for (Eigen::Index c = 0; c < f.w.cols(); ++c) {
    for (Eigen::Index r = 0; r < f.w.rows(); ++r) {
      const double v = f.w(r, c);
      const double dent = v > kLogFloor ? -(std::log(v) + 1.0) / n : -std::log(kLogFloor) / n;
      dw(r, c) += hyper.lambda_entropy * dent;
    }
  }
  if (!f.loss.contrast_degenerate) {
    const Vec mean = f.w.rowwise().mean();
    dw += hyper.lambda_contrast * (-4.0 * n / f.spread_x) * (f.w.colwise() - mean);
  }
  grad.mu_temp = (2.0 / n) * f.rt * f.w.transpose();
  grad.mu_solar = (2.0 / n) * f.rs * f.w.transpose();

  // softmax backward: dz = w .* (dw - <w, dw>)
  Mat dz(f.w.rows(), f.w.cols());
  for (Eigen::Index c = 0; c < f.w.cols(); ++c) {
    const double inner = f.w.col(c).dot(dw.col(c));
    dz.col(c) = f.w.col(c).cwiseProduct(dw.col(c).array().matrix() - Vec::Constant(f.w.rows(), inner));
  }
  grad.w2 = dz * f.h.transpose();
  grad.b2 = dz.rowwise().sum();
  const Mat da = (params.w2.transpose() * dz).cwiseProduct((1.0 - f.h.array().square()).matrix());
  grad.w1 = da * b.x.transpose();
  grad.b1 = da.rowwise().sum();
  return f.loss;
}

ClassifierParams init_classifier(const std::vector<Sample>& samples, const FeatureNormalization& norm,
                                 const Hyperparams& hyper, std::uint64_t seed) {
  hyper.validate();
  if (samples.empty()) throw ValidationError("init_classifier: no samples");
  const int k = hyper.k;
  const int d_in = static_cast<int>(samples[0].x.size());
  if (d_in != hyper.d_in) throw ConfigError("pricing.d_in", "does not match the context dimension " + std::to_string(d_in));
  Rng rng(mix_seed(seed, 5));
  ClassifierParams p;
  p.normalization = norm;
  auto small = [&](Mat& m, Eigen::Index r, Eigen::Index c) {
    m.resize(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.uniform(-0.05, 0.05);
  };
  small(p.w1, hyper.hidden, d_in);
  p.b1 = Vec::Zero(hyper.hidden);
  small(p.w2, k, hyper.hidden);
  p.b2 = Vec::Zero(k);

  // k-means++ style seeding on the normalized feature vectors
  const std::size_t n = samples.size();
  std::vector<std::size_t> picks{static_cast<std::size_t>(rng.index(n))};
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(picks.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (samples[i].x - samples[picks.back()].x).squaredNorm());
      total += d2[i];
    }
    std::size_t choice = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (choice = 0; choice + 1 < n; ++choice) {
        u -= d2[choice];
        if (u < 0.0) break;
      }
    } else {
      choice = static_cast<std::size_t>(rng.index(n));
    }
    picks.push_back(choice);
  }
  const auto t = samples[0].y_temp.size();
  const auto s = samples[0].y_solar.size();
  p.mu_temp.resize(t, k);
  p.mu_solar.resize(s, k);
  for (int j = 0; j < k; ++j) {
    p.mu_temp.col(j) = samples[picks[static_cast<std::size_t>(j)]].y_temp;
    p.mu_solar.col(j) = samples[picks[static_cast<std::size_t>(j)]].y_solar;
  }
  return p;
}

ClassifierParams offline_train(const std::vector<WeatherDay>& history, const Hyperparams& hyper, std::uint64_t seed) {
  hyper.validate();
  if (static_cast<int>(history.size()) < hyper.k)
    throw ValidationError("offline_train: need at least k history days");
  std::vector<Vec> raw;
  raw.reserve(history.size());
  for (const auto& d : history) raw.push_back(context_features(d));
  const FeatureNormalization norm = fit_normalization(raw);
  const auto samples = make_samples(history, norm);
  ClassifierParams p = init_classifier(samples, norm, hyper, seed);
  ParamGradient g;
  const double lr = hyper.gamma_offline;
  for (int e = 0; e < hyper.offline_epochs; ++e) {
    const LossBreakdown l = offline_loss_gradient(p, samples, hyper, g);
    p.loss_trace.push_back(l.total);
    if (!std::isfinite(l.total) || std::abs(l.total) > 1e6)
      throw NumericError("offline_train: loss diverged at epoch " + std::to_string(e) + " (" +
                         std::to_string(l.total) + ")");
    p.w1 -= lr * g.w1;
    p.b1 -= lr * g.b1;
    p.w2 -= lr * g.w2;
    p.b2 -= lr * g.b2;
    p.mu_temp -= lr * g.mu_temp;
    p.mu_solar -= lr * g.mu_solar;
  }
  p.loss_trace.push_back(offline_loss(p, samples, hyper).total);
  return p;
}

FeedbackResult feedback_update(const PriceSignal& alpha, const Vec& mean_demand, double eta_base,
                               const SmoothnessMetric& metric) {
  if (mean_demand.size() != alpha.values.size()) throw ValidationError("feedback_update: dimension mismatch");
  FeedbackResult out{alpha, false};
  const double norm = mean_demand.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    out.zero_gradient = true;
    return out;
  }
  const double step = eta_base / norm;
  Vec z(alpha.values.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = alpha.values[i] + step * mean_demand[i];
  out.alpha.values = project_ellipsoid(z, metric);
  out.alpha.day_index = alpha.day_index + 1;
  return out;
}

ClusterBank ClusterBank::zeros(int horizon, int k, const SmoothnessMetric& metric) {
  if (metric.dim() != horizon) throw ValidationError("cluster bank: metric dimension differs from horizon");
  return ClusterBank(Mat::Zero(horizon, k), metric);
}

namespace {

void check_simplex(const Vec& w, int k) {
  if (w.size() != k) throw ValidationError("cluster weights: expected " + std::to_string(k) + " entries");
  if ((w.array() < -1e-9).any() || std::abs(w.sum() - 1.0) > 1e-9)
    throw ValidationError("cluster weights: not on the probability simplex");
}

}  // namespace

PriceSignal cluster_price(const ClusterBank& bank, const Vec& weights) {
  check_simplex(weights, bank.k());
  PriceSignal out;
  out.values = Vec::Zero(bank.kappa.rows());
  for (Eigen::Index j = 0; j < bank.kappa.cols(); ++j) {
    for (Eigen::Index i = 0; i < bank.kappa.rows(); ++i) out.values[i] += weights[j] * bank.kappa(i, j);
  }
  return out;
}

ClusterUpdate cluster_update(const ClusterBank& bank, const Vec& weights, const Vec& mean_demand, double eta_base) {
  check_simplex(weights, bank.k());
  if (mean_demand.size() != bank.kappa.rows()) throw ValidationError("cluster_update: dimension mismatch");
  ClusterUpdate out{bank, false};
  const double norm = mean_demand.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    out.zero_gradient = true;
    return out;
  }
  const double step = eta_base / norm;
  for (Eigen::Index j = 0; j < bank.kappa.cols(); ++j) {
    if (weights[j] == 0.0) continue;
    const double s = step * weights[j];
    Vec z(bank.kappa.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = bank.kappa(i, j) + s * mean_demand[i];
    out.bank.kappa.col(j) = project_ellipsoid(z, bank.metric);
  }
  return out;
}

void TouSchedule::validate() const {
  if (tiers.empty()) throw ConfigError("tou.tiers", "at least one tier required");
  std::vector<std::pair<double, double>> all;
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    const auto& t = tiers[i];
    if (!std::isfinite(t.rate)) throw ConfigError("tou.tiers[" + std::to_string(i) + "].rate", "must be finite");
    for (const auto& w : t.windows) {
      if (!(w.first >= 0.0 && w.second <= 24.0 && w.first < w.second))
        throw ConfigError("tou.tiers[" + std::to_string(i) + "].windows", "need 0 <= start < end <= 24");
      all.push_back(w);
    }
  }
  std::sort(all.begin(), all.end());
  double at = 0.0;
  for (const auto& w : all) {
    if (w.first < at - 1e-12) throw ConfigError("tou.tiers", "tier windows overlap");
    if (w.first > at + 1e-12) throw ConfigError("tou.tiers", "tier windows leave a gap");
    at = w.second;
  }
  if (std::abs(at - 24.0) > 1e-12) throw ConfigError("tou.tiers", "tier windows must cover the whole day");
}

TouSchedule TouSchedule::three_tier() {
  TouSchedule s;
  s.tiers.push_back({"off_peak", 0.1, {{0.0, 13.0}, {19.0, 24.0}}});
  s.tiers.push_back({"mid_peak", 0.2, {{13.0, 15.0}}});
  s.tiers.push_back({"on_peak", 0.3, {{15.0, 19.0}}});
  return s;
}

PriceSignal tou_signal(const TouSchedule& schedule, const TimeGrid& grid) {
  schedule.validate();
  PriceSignal out;
  out.values.resize(grid.horizon_slots);
  for (int t = 0; t < grid.horizon_slots; ++t) {
    const double hour = grid.hour_of(t);
    for (const auto& tier : schedule.tiers) {
      for (const auto& w : tier.windows) {
        if (hour >= w.first && hour < w.second) out.values[t] = tier.rate;
      }
    }
  }
  return out;
}

namespace {

using nlohmann::json;

json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Mat mat_from(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(0, std::string("checkpoint: ") + what + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!j[static_cast<std::size_t>(r)].is_array() || static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols)
      throw ParseError(0, std::string("checkpoint: ragged matrix ") + what);
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Vec vec_from(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(0, std::string("checkpoint: ") + what + " must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ClassifierParams& p, const Hyperparams& h,
                     const std::optional<Mat>& kappa) {
  json j;
  j["format"] = "flexsig-checkpoint";
  j["version"] = 1;
  j["hyper"] = {{"k", h.k},
                {"hidden", h.hidden},
                {"d_in", h.d_in},
                {"lambda_l2", h.lambda_l2},
                {"lambda_variation", h.lambda_variation},
                {"lambda_entropy", h.lambda_entropy},
                {"lambda_contrast", h.lambda_contrast},
                {"gamma_offline", h.gamma_offline},
                {"eta_base", h.eta_base},
                {"offline_epochs", h.offline_epochs}};
  j["w1"] = to_json(p.w1);
  j["b1"] = to_json(p.b1);
  j["w2"] = to_json(p.w2);
  j["b2"] = to_json(p.b2);
  j["mu_temp"] = to_json(p.mu_temp);
  j["mu_solar"] = to_json(p.mu_solar);
  j["normalization"] = {{"mean", to_json(p.normalization.mean)}, {"scale", to_json(p.normalization.scale)}};
  j["loss_trace"] = p.loss_trace;
  if (kappa) j["kappa"] = to_json(*kappa);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(0, "cannot write checkpoint " + path.string());
  out << j.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.value("format", "") != "flexsig-checkpoint" || j.value("version", 0) != 1)
      throw ParseError(0, "checkpoint: unknown format or version");
    Checkpoint c;
    const auto& h = j.at("hyper");
    c.hyper.k = h.at("k").get<int>();
    c.hyper.hidden = h.at("hidden").get<int>();
    c.hyper.d_in = h.at("d_in").get<int>();
    c.hyper.lambda_l2 = h.at("lambda_l2").get<double>();
    c.hyper.lambda_variation = h.at("lambda_variation").get<double>();
    c.hyper.lambda_entropy = h.at("lambda_entropy").get<double>();
    c.hyper.lambda_contrast = h.at("lambda_contrast").get<double>();
    c.hyper.gamma_offline = h.at("gamma_offline").get<double>();
    c.hyper.eta_base = h.at("eta_base").get<double>();
    c.hyper.offline_epochs = h.at("offline_epochs").get<int>();
    c.params.w1 = mat_from(j.at("w1"), "w1");
    c.params.b1 = vec_from(j.at("b1"), "b1");
    c.params.w2 = mat_from(j.at("w2"), "w2");
    c.params.b2 = vec_from(j.at("b2"), "b2");
    c.params.mu_temp = mat_from(j.at("mu_temp"), "mu_temp");
    c.params.mu_solar = mat_from(j.at("mu_solar"), "mu_solar");
    c.params.normalization.mean = vec_from(j.at("normalization").at("mean"), "normalization.mean");
    c.params.normalization.scale = vec_from(j.at("normalization").at("scale"), "normalization.scale");
    c.params.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    if (j.contains("kappa")) c.kappa = mat_from(j.at("kappa"), "kappa");
    if (c.params.k() != c.hyper.k || c.params.d_in() != c.hyper.d_in ||
        c.params.normalization.mean.size() != c.params.d_in() || (c.params.normalization.scale.array() <= 0.0).any())
      throw ValidationError("checkpoint: parameter shapes disagree with hyperparameters");
    return c;
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("checkpoint: ") + e.what());
  }
}

}  // namespace flexsig
