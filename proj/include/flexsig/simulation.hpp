/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flexsig/hems_solver.hpp"
#include "flexsig/pricing.hpp"
#include "flexsig/scenario.hpp"

namespace flexsig {

enum class ModeKind { benchmark, tou, dynamic_context_agnostic, dynamic_clustered, two_way, direct_control };

ModeKind parse_mode(const std::string& name);
std::string to_string(ModeKind kind);

struct NegotiationParams {
  int max_rounds = 100;
  double tol = 1e-3;  ///< relative price change that ends a negotiation
};

struct SimulationMode {
  ModeKind kind = ModeKind::benchmark;
  TouSchedule tou = TouSchedule::three_tier();
  NegotiationParams negotiation;
  double direct_control_gamma_scale = 1e-6;
};

/// Carried-over device state of one household between days.
struct HouseholdState {
  double t_in = 75.0;
  double soc = 0.5;
};

/// Everything a horizon run needs. Participation flags on `population` are
/// honored, except in benchmark mode where nobody responds.
struct SimulationSetup {
  std::vector<Household> population;
  TimeGrid grid;
  std::vector<WeatherDay> realized;
  std::vector<WeatherDay> forecast;  ///< same days; used for planning and as learner context
  SimulationMode mode;
  Hyperparams hyper;
  std::optional<ClassifierParams> classifier;  ///< required by dynamic_clustered
  double gamma_scale = 1.0;                    ///< applied to participants
  PriceScope price_scope = PriceScope::all_devices;
  bool no_sell = true;
  double initial_indoor_f = 75.0;
  SolverOptions solver;
  unsigned threads = 0;
  std::string config_fingerprint;
};

struct DayInputs {
  const WeatherDay* realized = nullptr;
  const WeatherDay* forecast = nullptr;
  const WeatherDay* forecast_next = nullptr;  ///< second planning day when horizon spans two days
};

struct DayResult {
  Vec aggregate_kw;  ///< realized, one day
  Vec planned_kw;    ///< anticipated from the forecast, full horizon
  std::vector<HouseholdPlan> plans;
  std::vector<HouseholdState> next_state;
  double max_kkt_residual = 0.0;
  int max_iterations = 0;
};

/// Builds the household problems of one day.
std::vector<HouseholdProblem> day_problems(const std::vector<Household>& pop, const std::vector<HouseholdState>& state,
                                           const std::optional<Vec>& prices, const DayInputs& day,
                                           const TimeGrid& grid, double participant_gamma_scale,
                                           PriceScope scope, bool no_sell);

/// Solves one day and executes the plans against realized weather. Throws
/// std::runtime_error naming the household when any solve fails.
DayResult run_day(const std::vector<Household>& pop, const std::vector<HouseholdState>& state,
                  const std::optional<Vec>& prices, const DayInputs& day, const TimeGrid& grid,
                  double participant_gamma_scale = 1.0, PriceScope scope = PriceScope::all_devices,
                  bool no_sell = true, const SolverOptions& opts = {}, unsigned threads = 0);

struct NegotiationResult {
  PriceSignal alpha;
  int rounds = 0;
  bool converged = false;
  double last_change = 0.0;  ///< relative change of the returned round
};

/// Repeats feedback_update against same-day anticipated demand until the
/// relative price change drops to tol or max_rounds pass. Non-participant
/// plans are solved once. Without convergence the round with the lowest
/// grid cost of anticipated demand is returned.
NegotiationResult two_way_negotiate(const std::vector<Household>& pop, const std::vector<HouseholdState>& state,
                                    const DayInputs& day, const TimeGrid& grid, const PriceSignal& start,
                                    const SmoothnessMetric& metric, double eta_base, const NegotiationParams& params,
                                    double participant_gamma_scale, PriceScope scope, bool no_sell,
                                    const SolverOptions& opts, unsigned threads);

struct DayRecord {
  int date_index = 0;
  Vec prices;                ///< empty when no price was broadcast
  Vec aggregate_demand_kw;   ///< realized
  Vec benchmark_demand_kw;   ///< filled by callers that also ran the benchmark
  Vec mean_demand_kw;        ///< feedback gradient (realized mean over all households)
  Vec cluster_weights;       ///< dynamic_clustered only
  double price_change_rel = -1.0;  ///< ||a_t - a_{t-1}|| / ||a_{t-1}||; -1 when undefined
  int negotiation_rounds = 0;
  bool negotiation_converged = false;
  double max_kkt_residual = 0.0;
  int max_iterations = 0;
};

struct SimulationTrace {
  ModeKind mode = ModeKind::benchmark;
  std::string config_fingerprint;
  std::vector<DayRecord> days;
  std::optional<Mat> final_kappa;
  bool complete = false;
  std::string error;  ///< set when a day failed; days holds the partial trace
};

SimulationTrace run_horizon(const SimulationSetup& setup);

/// Convenience: identical to run_horizon with mode two_way and participant
/// elasticities scaled by mode.direct_control_gamma_scale.
SimulationTrace direct_control_run(SimulationSetup setup);

/// First 1-based day whose price change falls below `threshold`; 0 if never.
int convergence_day(const SimulationTrace& trace, double threshold = 0.05);

}  // namespace flexsig
