/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flexsig/devices.hpp"
#include "flexsig/projection.hpp"
#include "flexsig/scenario.hpp"

namespace flexsig {

struct PriceSignal {
  Vec values;
  int day_index = 0;
};

struct Hyperparams {
  int k = 6;
  int hidden = 60;
  int d_in = 48;
  double lambda_l2 = 0.1;
  double lambda_variation = 0.9;
  double lambda_entropy = -0.4;
  double lambda_contrast = 0.5;
  double gamma_offline = 0.001;
  double eta_base = 0.1;
  int offline_epochs = 3000;

  /// Variation weight of the price metric K = I + lambda D^T D, relative to the l2 weight.
  double metric_lambda() const { return lambda_variation / lambda_l2; }
  void validate() const;
};

/// Per-feature affine normalization x_n = (x - mean) / scale.
struct FeatureNormalization {
  Vec mean;
  Vec scale;

  Vec apply(const Vec& raw) const { return (raw - mean).cwiseQuotient(scale); }
};

/// Raw context vector of a day: hourly temperatures followed by hourly irradiance.
Vec context_features(const WeatherDay& day);

/// Mean and standard deviation per feature; near-constant features get scale 1.
FeatureNormalization fit_normalization(const std::vector<Vec>& raw);

struct ClassifierParams {
  Mat w1;  ///< hidden x d_in
  Vec b1;
  Mat w2;  ///< k x hidden
  Vec b2;
  Mat mu_temp;   ///< T x k centroids (normalized units)
  Mat mu_solar;  ///< T x k
  FeatureNormalization normalization;
  std::vector<double> loss_trace;  ///< total loss before each epoch, then after the last

  int k() const { return static_cast<int>(b2.size()); }
  int d_in() const { return static_cast<int>(w1.cols()); }
};

/// Softmax cluster weights of a normalized context vector.
Vec classifier_forward(const ClassifierParams& params, const Vec& x);

/// Normalizes a forecast and evaluates the classifier.
Vec cluster_weights(const ClassifierParams& params, const WeatherDay& forecast);

/// One normalized training day.
struct Sample {
  Vec x;
  Vec y_temp;
  Vec y_solar;
};

std::vector<Sample> make_samples(const std::vector<WeatherDay>& days, const FeatureNormalization& norm);

struct LossBreakdown {
  double reconstruction = 0.0;
  double entropy = 0.0;   ///< unweighted L_entropy
  double contrast = 0.0;  ///< unweighted L_contrast
  double total = 0.0;
  bool contrast_degenerate = false;  ///< all inputs identical, contrast defined as 0
};

struct ParamGradient {
  Mat w1;
  Vec b1;
  Mat w2;
  Vec b2;
  Mat mu_temp;
  Mat mu_solar;
};

LossBreakdown offline_loss(const ClassifierParams& params, const std::vector<Sample>& batch, const Hyperparams& hyper);

/// Loss together with its analytic gradient with respect to every parameter block.
LossBreakdown offline_loss_gradient(const ClassifierParams& params, const std::vector<Sample>& batch,
                                    const Hyperparams& hyper, ParamGradient& grad);

/// Seeded initialization: uniform weights in [-0.05, 0.05], zero biases,
/// centroids picked from the samples k-means++ style.
ClassifierParams init_classifier(const std::vector<Sample>& samples, const FeatureNormalization& norm,
                                 const Hyperparams& hyper, std::uint64_t seed);

/// Full-batch gradient descent on the offline loss. Throws NumericError when
/// the loss exceeds 1e6.
ClassifierParams offline_train(const std::vector<WeatherDay>& history, const Hyperparams& hyper, std::uint64_t seed);

struct FeedbackResult {
  PriceSignal alpha;
  bool zero_gradient = false;
};

/// alpha' = P_A(alpha + eta_base / ||g|| * g) with g the mean demand.
FeedbackResult feedback_update(const PriceSignal& alpha, const Vec& mean_demand, double eta_base,
                               const SmoothnessMetric& metric);

struct ClusterBank {
  Mat kappa;  ///< horizon x k
  SmoothnessMetric metric;

  ClusterBank(Mat kappa_, SmoothnessMetric metric_) : kappa(std::move(kappa_)), metric(std::move(metric_)) {}
  static ClusterBank zeros(int horizon, int k, const SmoothnessMetric& metric);
  int k() const { return static_cast<int>(kappa.cols()); }
};

/// alpha = kappa * weights; weights must lie on the simplex within 1e-9.
PriceSignal cluster_price(const ClusterBank& bank, const Vec& weights);

struct ClusterUpdate {
  ClusterBank bank;
  bool zero_gradient = false;
};

/// Column j moves by eta_base / ||g|| * weights[j] * g, then each column is projected.
ClusterUpdate cluster_update(const ClusterBank& bank, const Vec& weights, const Vec& mean_demand, double eta_base);

struct TouTier {
  std::string name;
  double rate = 0.0;
  std::vector<std::pair<double, double>> windows;  ///< [start_hour, end_hour) within 0..24
};

struct TouSchedule {
  std::vector<TouTier> tiers;

  void validate() const;
  /// Off-peak all day except mid-peak 13-15 and on-peak 15-19.
  static TouSchedule three_tier();
};

/// Static piecewise-constant price over the horizon; identical every day.
PriceSignal tou_signal(const TouSchedule& schedule, const TimeGrid& grid);

/// Versioned JSON checkpoint of the classifier, hyperparameters and (optionally) the cluster bank.
void save_checkpoint(const std::filesystem::path& path, const ClassifierParams& params, const Hyperparams& hyper,
                     const std::optional<Mat>& kappa = std::nullopt);

struct Checkpoint {
  ClassifierParams params;
  Hyperparams hyper;
  std::optional<Mat> kappa;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace flexsig
