#ifndef EMOSCAST_VERIFICATION_HPP
#define EMOSCAST_VERIFICATION_HPP

// Proper scores and calibration diagnostics for truncated-normal and
// raw-ensemble forecasts: CRPS/CRPSS, PIT and verification-rank
// histograms, central-interval coverage and width, MAE of the median,
// RMSE of the mean, and stationary-block-bootstrap confidence
// intervals over daily score series.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "emoscast/dates.hpp"
#include "emoscast/tn_dist.hpp"

namespace emoscast {

// Nominal central interval level 1 - 2/53 = 51/53, the coverage of the
// 52-member ensemble's range.
inline constexpr double kDefaultAlpha = 2.0 / 53.0;
inline constexpr int kRankBins = 53;
inline constexpr int kDefaultPitBins = 20;

using RawEnsemble = std::vector<double>; // all 52 exchangeably scored

struct ForecastCase {
  std::string station_id;
  Date valid_date{};
  int lead_time = 1;
  std::variant<TruncNormal, RawEnsemble> predictive;
  double obs = 0.0;
};

struct CaseScore {
  std::string station_id;
  Date valid_date{};
  double crps = 0.0;
  double pit_or_rank = 0.0; // PIT in [0,1] for TN, rank in 1..53 for raw
  bool interval_hit = false;
  double interval_width = 0.0;
  double abs_err_median = 0.0;
  double sq_err_mean = 0.0;
};

struct ScoreTable {
  std::vector<CaseScore> rows;

  // Mean of a per-case field for every date, ordered by date.
  std::vector<std::pair<Date, double>>
  daily_means(const std::function<double(const CaseScore&)>& field) const;
};

// CRPS of the empirical step CDF, evaluated exactly:
//   mean |x_i - obs| - (1/2m^2) sum_ij |x_i - x_j|.
double ensemble_crps(std::span<const double> members, double obs);

double mean_crps(const std::vector<ForecastCase>& cases);

class ZeroReference : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// 1 - score/reference; positively oriented.
double crpss(double mean_score, double mean_score_ref);

struct IntervalResult {
  bool hit = false;
  double width = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Central (1-alpha) interval between the alpha/2 and 1-alpha/2
// quantiles.  Raw ensembles use order statistics at positions
// (m+1)p, which at the default alpha are exactly the sample minimum
// and maximum.
IntervalResult central_interval(const ForecastCase& fc,
                                double alpha = kDefaultAlpha);

// Scores one case end to end; tied ranks randomize via rng_draw,
// a uniform [0,1) source.
CaseScore score_case(const ForecastCase& fc, double alpha,
                     const std::function<double()>& rng_draw);

ScoreTable score_cases(const std::vector<ForecastCase>& cases, double alpha,
                       std::uint64_t seed);

// Rank of the observation within {obs} + members, ties uniform among
// admissible ranks; bins 1..53.
std::vector<long> rank_histogram(const std::vector<ForecastCase>& cases,
                                 std::uint64_t seed);

// Histogram of PIT values over [0, 1].
std::vector<long> pit_histogram(const std::vector<ForecastCase>& cases,
                                int bins = kDefaultPitBins);

// Same binning applied to already-computed PIT values / ranks.
std::vector<long> pit_histogram_values(std::span<const double> pits, int bins);
std::vector<long> rank_histogram_values(std::span<const double> ranks);

double mae_median(const std::vector<ForecastCase>& cases);
double rmse_mean(const std::vector<ForecastCase>& cases);

// Stationary bootstrap (geometric block lengths, circular wrap) of a
// daily series; returns the percentile interval of the resampled mean.
// A constant series yields a zero-width interval.
struct BootstrapInterval {
  double lower = 0.0;
  double upper = 0.0;
};

BootstrapInterval stationary_bootstrap_ci(std::span<const double> daily_series,
                                          int n_resamples, double level,
                                          double mean_block_length,
                                          std::uint64_t seed);

// Generic variant: the statistic is recomputed from each resample's
// index vector (paired series, skill scores).
BootstrapInterval stationary_bootstrap_ci_stat(
    std::size_t series_length, int n_resamples, double level,
    double mean_block_length, std::uint64_t seed,
    const std::function<double(const std::vector<std::size_t>&)>& statistic);

// Default mean block length: ceil(L^(1/3)).
double default_block_length(std::size_t series_length);

// scores_agg.csv row schema: model,lead_time,metric,value,ci_low,ci_high
std::string metrics_csv_header();
// hist csv row schema: model,lead_time,bin,count
std::string hist_csv_header();

} // namespace emoscast

#endif
