#ifndef EMOSCAST_EMOS_HPP
#define EMOSCAST_EMOS_HPP

// EMOS for wind speed: the link mapping ensemble statistics to a
// truncated normal,
//   mu      = a0 + a1^2 f_hres + a2^2 f_ctrl + a3^2 ens_mean
//   sigma^2 = b0^2 + b1^2 ens_var
// rolling-window training sets, and parameter estimation by minimizing
// the mean CRPS over the training data.

#include <map>
#include <string>
#include <vector>

#include "emoscast/data_model.hpp"
#include "emoscast/optimize.hpp"
#include "emoscast/tn_dist.hpp"

namespace emoscast {

// Scale floor inside the link; the parametrization admits sigma = 0.
inline constexpr double kSigmaMin = 1e-4;

// The six link coefficients.  All enter squared except a0, so each of
// a1..b1 and its negation give the same model; the canonical form keeps
// them nonnegative.
struct EmosParams {
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double b0 = 0.0;
  double b1 = 0.0;

  std::vector<double> to_vector() const { return {a0, a1, a2, a3, b0, b1}; }
  static EmosParams from_vector(const std::vector<double>& v);
  EmosParams canonical() const;
  bool finite() const;
};

// Ensemble-mean-centered default start for the optimizer.
inline EmosParams default_init() { return {0.0, 0.0, 0.0, 1.0, 1.0, 1.0}; }

struct EnsembleStats {
  double mean = 0.0;     // m/s
  double variance = 0.0; // (m/s)^2, divisor 49
};

// Mean and sample variance of the 50 exchangeable members.  Sums run
// over a sorted copy so permuting members cannot move a single bit.
EnsembleStats ensemble_stats(const EnsembleForecast& forecast);

TruncNormal link(const EmosParams& params, const EnsembleForecast& forecast);
TruncNormal link_from_stats(const EmosParams& params, double hres, double ctrl,
                            const EnsembleStats& stats);

struct TrainingCase {
  EnsembleForecast forecast;
  double obs = 0.0;
  EnsembleStats stats; // cached, parameter-independent
};

struct TrainingSet {
  std::vector<TrainingCase> cases;
  int window_length = 0; // n days
  Date target_date{};
  int lead_time = 1;
};

class TrainingTooSmall : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NonFiniteObjective : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMinTrainingCases = 60; // 10 per free parameter

// Complete cases of the n calendar days strictly preceding target_date,
// ordered by station id then date.  Throws TrainingTooSmall below
// min_cases.
TrainingSet build_training_set(const Dataset& dataset,
                               const std::vector<std::string>& station_ids,
                               Date target_date, int lead_time, int n,
                               int min_cases = kMinTrainingCases);

// As above but from already-paired cases (synthetic fixtures, tests).
TrainingSet make_training_set(
    const std::vector<std::pair<EnsembleForecast, Observation>>& pairs,
    int n, Date target_date, int lead_time);

// Mean tn_crps of the linked predictive over the training cases.
double mean_crps_objective(const EmosParams& params,
                           const TrainingSet& training);

struct OptimizerConfig {
  OptimMethod method = OptimMethod::DerivativeFreeSimplex;
  int max_iterations = 500;
  double tolerance = 1e-6; // m/s of mean CRPS
  EmosParams init = default_init();
  int simplex_restarts = 1;
};

struct EmosFit {
  EmosParams params;
  double objective = 0.0;
  std::size_t n_cases = 0;
  int iterations = 0;
  std::vector<double> trace; // nonincreasing incumbent objectives
};

// Minimizes the mean CRPS from config.init; the result never scores
// worse than the init.  Throws NonFiniteObjective if the objective is
// not finite at the start.
EmosFit estimate_params(const TrainingSet& training,
                        const OptimizerConfig& config);

struct GroupFitResult {
  std::map<std::string, EmosFit> fits;
  std::map<std::string, std::string> failures; // group -> reason
};

// One fit per group over the pooled training data of its member
// stations.  A single group reproduces regional estimation, singleton
// groups the local one.  warm_inits overrides config.init per group.
GroupFitResult
fit_group_models(const Dataset& dataset,
                 const std::map<std::string, std::string>& grouping,
                 Date target_date, int lead_time, int n,
                 const OptimizerConfig& config,
                 const std::map<std::string, EmosParams>& warm_inits = {});

// params.csv schema used by the tools:
//   date,lead_time,group_id,a0,a1,a2,a3,b0,b1,objective,n_cases
std::string params_csv_header();
std::string params_csv_row(Date date, int lead_time,
                           const std::string& group_id, const EmosFit& fit);

} // namespace emoscast

#endif
