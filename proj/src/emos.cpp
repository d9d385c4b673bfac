#include "emoscast/emos.hpp"

#include <algorithm>
#include <cmath>

namespace emoscast {

EmosParams EmosParams::from_vector(const std::vector<double>& v) {
  if (v.size() != 6)
    throw std::invalid_argument("EmosParams::from_vector: need 6 values");
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

EmosParams EmosParams::canonical() const {
  return {a0,          std::abs(a1), std::abs(a2),
          std::abs(a3), std::abs(b0), std::abs(b1)};
}

bool EmosParams::finite() const {
  for (double v : {a0, a1, a2, a3, b0, b1})
    if (!std::isfinite(v))
      return false;
  return true;
}

EnsembleStats ensemble_stats(const EnsembleForecast& forecast) {
  std::array<double, kEnsembleMembers> sorted = forecast.members;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted)
    sum += v;
  const double mean = sum / double(kEnsembleMembers);
  double ss = 0.0;
  for (double v : sorted)
    ss += (v - mean) * (v - mean);
  return {mean, ss / double(kEnsembleMembers - 1)};
}

TruncNormal link_from_stats(const EmosParams& params, double hres, double ctrl,
                            const EnsembleStats& stats) {
  const double mu = params.a0 + params.a1 * params.a1 * hres +
                    params.a2 * params.a2 * ctrl +
                    params.a3 * params.a3 * stats.mean;
  const double var =
      params.b0 * params.b0 + params.b1 * params.b1 * stats.variance;
  return {mu, std::max(std::sqrt(var), kSigmaMin)};
}

TruncNormal link(const EmosParams& params, const EnsembleForecast& forecast) {
  return link_from_stats(params, forecast.hres, forecast.ctrl,
                         ensemble_stats(forecast));
}

TrainingSet build_training_set(const Dataset& dataset,
                               const std::vector<std::string>& station_ids,
                               Date target_date, int lead_time, int n,
                               int min_cases) {
  if (n < 1)
    throw std::invalid_argument("build_training_set: window must be >= 1 day");
  const DateRange window{target_date - std::chrono::days{n},
                         target_date - std::chrono::days{1}};
  TrainingSet training;
  training.window_length = n;
  training.target_date = target_date;
  training.lead_time = lead_time;
  for (const auto& [forecast, obs] :
       complete_cases(dataset, station_ids, window, lead_time))
    training.cases.push_back(
        {*forecast, obs->wind_speed, ensemble_stats(*forecast)});
  if (std::ssize(training.cases) < min_cases)
    throw TrainingTooSmall("training set for " + format_date(target_date) +
                           " lead " + std::to_string(lead_time) + " has " +
                           std::to_string(training.cases.size()) +
                           " cases, need " + std::to_string(min_cases));
  return training;
}

TrainingSet make_training_set(
    const std::vector<std::pair<EnsembleForecast, Observation>>& pairs,
    int n, Date target_date, int lead_time) {
  TrainingSet training;
  training.window_length = n;
  training.target_date = target_date;
  training.lead_time = lead_time;
  for (const auto& [forecast, obs] : pairs)
    training.cases.push_back(
        {forecast, obs.wind_speed, ensemble_stats(forecast)});
  return training;
}

double mean_crps_objective(const EmosParams& params,
                           const TrainingSet& training) {
  if (training.cases.empty())
    throw std::invalid_argument("mean_crps_objective: empty training set");
  double sum = 0.0;
  for (const TrainingCase& c : training.cases) {
    const TruncNormal predictive =
        link_from_stats(params, c.forecast.hres, c.forecast.ctrl, c.stats);
    sum += tn_crps(predictive, c.obs);
  }
  return sum / double(training.cases.size());
}

EmosFit estimate_params(const TrainingSet& training,
                        const OptimizerConfig& config) {
  const ObjectiveFn objective = [&training](const std::vector<double>& v) {
    return mean_crps_objective(EmosParams::from_vector(v), training);
  };
  OptimOptions options;
  options.method = config.method;
  options.max_iterations = config.max_iterations;
  options.tolerance = config.tolerance;
  options.simplex_restarts = config.simplex_restarts;
  OptimResult result;
  try {
    result = minimize(objective, config.init.to_vector(), options);
  } catch (const std::runtime_error& e) {
    throw NonFiniteObjective(e.what());
  }
  EmosFit fit;
  fit.params = EmosParams::from_vector(result.x).canonical();
  fit.objective = result.objective;
  fit.n_cases = training.cases.size();
  fit.iterations = result.iterations;
  fit.trace = std::move(result.trace);
  return fit;
}

GroupFitResult
fit_group_models(const Dataset& dataset,
                 const std::map<std::string, std::string>& grouping,
                 Date target_date, int lead_time, int n,
                 const OptimizerConfig& config,
                 const std::map<std::string, EmosParams>& warm_inits) {
  std::map<std::string, std::vector<std::string>> members;
  for (const auto& [station, group] : grouping)
    members[group].push_back(station);

  GroupFitResult result;
  for (const auto& [group, stations] : members) {
    OptimizerConfig group_config = config;
    if (const auto it = warm_inits.find(group); it != warm_inits.end())
      group_config.init = it->second;
    try {
      const TrainingSet training =
          build_training_set(dataset, stations, target_date, lead_time, n);
      result.fits.emplace(group, estimate_params(training, group_config));
    } catch (const TrainingTooSmall& e) {
      result.failures.emplace(group, e.what());
    } catch (const NonFiniteObjective& e) {
      result.failures.emplace(group, e.what());
    }
  }
  return result;
}

std::string params_csv_header() {
  return "date,lead_time,group_id,a0,a1,a2,a3,b0,b1,objective,n_cases";
}

std::string params_csv_row(Date date, int lead_time,
                           const std::string& group_id, const EmosFit& fit) {
  const EmosParams& p = fit.params;
  std::string row = format_date(date) + ',' + std::to_string(lead_time) + ',' +
                    group_id;
  for (double v : {p.a0, p.a1, p.a2, p.a3, p.b0, p.b1})
    row += ',' + format_double(v);
  row += ',' + format_double(fit.objective);
  row += ',' + std::to_string(fit.n_cases);
  return row;
}

} // namespace emoscast
