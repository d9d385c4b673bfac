#include "emoscast/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "emoscast/rng.hpp"
#include "emoscast/stats.hpp"

namespace emoscast {

namespace {

double ensemble_quantile(std::vector<double> members, double p) {
  std::sort(members.begin(), members.end());
  return empirical_quantile_sorted(members, p);
}

double ensemble_mean(std::span<const double> members) {
  return mean(members);
}

} // namespace

std::vector<std::pair<Date, double>> ScoreTable::daily_means(
    const std::function<double(const CaseScore&)>& field) const {
  std::map<Date, std::pair<double, long>> acc;
  for (const CaseScore& row : rows) {
    auto& [sum, count] = acc[row.valid_date];
    sum += field(row);
    ++count;
  }
  std::vector<std::pair<Date, double>> out;
  out.reserve(acc.size());
  for (const auto& [date, sc] : acc)
    out.emplace_back(date, sc.first / double(sc.second));
  return out;
}

double ensemble_crps(std::span<const double> members, double obs) {
  if (members.empty())
    throw std::invalid_argument("ensemble_crps: empty ensemble");
  const std::size_t m = members.size();
  std::vector<double> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  double abs_term = 0.0;
  double spread_term = 0.0; // sum_ij |x_i - x_j| via the sorted identity
  for (std::size_t i = 0; i < m; ++i) {
    abs_term += std::abs(sorted[i] - obs);
    spread_term += (2.0 * double(i) - double(m) + 1.0) * sorted[i];
  }
  return abs_term / double(m) - spread_term / (double(m) * double(m));
}

double mean_crps(const std::vector<ForecastCase>& cases) {
  if (cases.empty())
    throw std::invalid_argument("mean_crps: no cases");
  double sum = 0.0;
  for (const ForecastCase& fc : cases) {
    if (const auto* tn = std::get_if<TruncNormal>(&fc.predictive))
      sum += tn_crps(*tn, fc.obs);
    else
      sum += ensemble_crps(std::get<RawEnsemble>(fc.predictive), fc.obs);
  }
  return sum / double(cases.size());
}

double crpss(double mean_score, double mean_score_ref) {
  if (!(mean_score_ref > 0.0))
    throw ZeroReference("crpss: reference mean score must be positive");
  return 1.0 - mean_score / mean_score_ref;
}

IntervalResult central_interval(const ForecastCase& fc, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("central_interval: alpha must be in (0,1)");
  IntervalResult r;
  if (const auto* tn = std::get_if<TruncNormal>(&fc.predictive)) {
    r.lower = tn_quantile(*tn, 0.5 * alpha);
    r.upper = tn_quantile(*tn, 1.0 - 0.5 * alpha);
  } else {
    const auto& members = std::get<RawEnsemble>(fc.predictive);
    std::vector<double> sorted(members.begin(), members.end());
    std::sort(sorted.begin(), sorted.end());
    const double m = double(sorted.size());
    // order-statistic position (m+1)p, clamped and interpolated; the
    // default alpha lands exactly on the sample minimum and maximum
    const auto at = [&](double p) {
      const double pos = std::clamp((m + 1.0) * p, 1.0, m) - 1.0;
      const std::size_t lo = std::size_t(pos);
      if (lo + 1 >= sorted.size())
        return sorted.back();
      const double w = pos - double(lo);
      return (1.0 - w) * sorted[lo] + w * sorted[lo + 1];
    };
    r.lower = at(0.5 * alpha);
    r.upper = at(1.0 - 0.5 * alpha);
  }
  r.width = r.upper - r.lower;
  r.hit = fc.obs >= r.lower && fc.obs <= r.upper;
  return r;
}

CaseScore score_case(const ForecastCase& fc, double alpha,
                     const std::function<double()>& rng_draw) {
  if (fc.obs < 0.0)
    throw std::invalid_argument("score_case: negative observation");
  CaseScore row;
  row.station_id = fc.station_id;
  row.valid_date = fc.valid_date;
  const IntervalResult interval = central_interval(fc, alpha);
  row.interval_hit = interval.hit;
  row.interval_width = interval.width;
  if (const auto* tn = std::get_if<TruncNormal>(&fc.predictive)) {
    row.crps = tn_crps(*tn, fc.obs);
    row.pit_or_rank = tn_pit(*tn, fc.obs);
    row.abs_err_median = std::abs(tn_median(*tn) - fc.obs);
    const double err = tn_mean(*tn) - fc.obs;
    row.sq_err_mean = err * err;
  } else {
    const auto& members = std::get<RawEnsemble>(fc.predictive);
    row.crps = ensemble_crps(members, fc.obs);
    long less = 0, equal = 0;
    for (double v : members) {
      if (v < fc.obs)
        ++less;
      else if (v == fc.obs)
        ++equal;
    }
    long rank = 1 + less;
    if (equal > 0)
      rank += long(rng_draw() * double(equal + 1)); // uniform 0..equal
    row.pit_or_rank = double(rank);
    row.abs_err_median =
        std::abs(ensemble_quantile(members, 0.5) - fc.obs);
    const double err = ensemble_mean(members) - fc.obs;
    row.sq_err_mean = err * err;
  }
  return row;
}

ScoreTable score_cases(const std::vector<ForecastCase>& cases, double alpha,
                       std::uint64_t seed) {
  Rng rng(seed);
  const auto draw = [&rng]() { return rng.uniform01(); };
  ScoreTable table;
  table.rows.reserve(cases.size());
  for (const ForecastCase& fc : cases)
    table.rows.push_back(score_case(fc, alpha, draw));
  return table;
}

std::vector<long> rank_histogram(const std::vector<ForecastCase>& cases,
                                 std::uint64_t seed) {
  Rng rng(seed);
  const auto draw = [&rng]() { return rng.uniform01(); };
  std::vector<long> bins(kRankBins, 0);
  for (const ForecastCase& fc : cases) {
    const auto& members = std::get<RawEnsemble>(fc.predictive);
    if (std::ssize(members) + 1 != kRankBins)
      throw std::invalid_argument("rank_histogram: need 52-member ensembles");
    long less = 0, equal = 0;
    for (double v : members) {
      if (v < fc.obs)
        ++less;
      else if (v == fc.obs)
        ++equal;
    }
    long rank = 1 + less;
    if (equal > 0)
      rank += long(draw() * double(equal + 1));
    ++bins[std::size_t(rank - 1)];
  }
  return bins;
}

std::vector<long> pit_histogram_values(std::span<const double> pits,
                                       int bins) {
  if (bins < 1)
    throw std::invalid_argument("pit_histogram: bins must be >= 1");
  std::vector<long> counts(std::size_t(bins), 0);
  for (double pit : pits) {
    const int bin = std::clamp(int(pit * bins), 0, bins - 1);
    ++counts[std::size_t(bin)];
  }
  return counts;
}

std::vector<long> rank_histogram_values(std::span<const double> ranks) {
  std::vector<long> counts(kRankBins, 0);
  for (double rank : ranks) {
    const int bin = std::clamp(int(rank) - 1, 0, kRankBins - 1);
    ++counts[std::size_t(bin)];
  }
  return counts;
}

std::vector<long> pit_histogram(const std::vector<ForecastCase>& cases,
                                int bins) {
  std::vector<double> pits;
  pits.reserve(cases.size());
  for (const ForecastCase& fc : cases)
    pits.push_back(tn_pit(std::get<TruncNormal>(fc.predictive), fc.obs));
  return pit_histogram_values(pits, bins);
}

double mae_median(const std::vector<ForecastCase>& cases) {
  if (cases.empty())
    throw std::invalid_argument("mae_median: no cases");
  double sum = 0.0;
  for (const ForecastCase& fc : cases) {
    double med;
    if (const auto* tn = std::get_if<TruncNormal>(&fc.predictive))
      med = tn_median(*tn);
    else
      med = ensemble_quantile(std::get<RawEnsemble>(fc.predictive), 0.5);
    sum += std::abs(med - fc.obs);
  }
  return sum / double(cases.size());
}

double rmse_mean(const std::vector<ForecastCase>& cases) {
  if (cases.empty())
    throw std::invalid_argument("rmse_mean: no cases");
  double sum = 0.0;
  for (const ForecastCase& fc : cases) {
    double m;
    if (const auto* tn = std::get_if<TruncNormal>(&fc.predictive))
      m = tn_mean(*tn);
    else
      m = ensemble_mean(std::get<RawEnsemble>(fc.predictive));
    const double err = m - fc.obs;
    sum += err * err;
  }
  return std::sqrt(sum / double(cases.size()));
}

double default_block_length(std::size_t series_length) {
  return std::ceil(std::cbrt(double(series_length)));
}

namespace {

// One stationary-bootstrap index path: geometric block lengths of the
// given mean, wrapping circularly.
std::vector<std::size_t> bootstrap_indices(std::size_t n,
                                           double mean_block_length,
                                           Rng& rng) {
  const double p = 1.0 / std::max(mean_block_length, 1.0);
  std::vector<std::size_t> idx(n);
  idx[0] = std::size_t(rng.uniform_int(n));
  for (std::size_t t = 1; t < n; ++t)
    idx[t] = rng.uniform01() < p ? std::size_t(rng.uniform_int(n))
                                 : (idx[t - 1] + 1) % n;
  return idx;
}

} // namespace

BootstrapInterval stationary_bootstrap_ci_stat(
    std::size_t series_length, int n_resamples, double level,
    double mean_block_length, std::uint64_t seed,
    const std::function<double(const std::vector<std::size_t>&)>& statistic) {
  if (series_length < 2)
    throw std::invalid_argument("stationary bootstrap: series length < 2");
  if (n_resamples < 1)
    throw std::invalid_argument("stationary bootstrap: need >= 1 resample");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("stationary bootstrap: level in (0,1)");
  std::vector<double> stats;
  stats.reserve(std::size_t(n_resamples));
  for (int b = 0; b < n_resamples; ++b) {
    Rng rng(mix_seed(seed, std::uint64_t(b)));
    stats.push_back(statistic(bootstrap_indices(series_length,
                                                mean_block_length, rng)));
  }
  std::sort(stats.begin(), stats.end());
  const double tail = 0.5 * (1.0 - level);
  return {empirical_quantile_sorted(stats, tail),
          empirical_quantile_sorted(stats, 1.0 - tail)};
}

BootstrapInterval stationary_bootstrap_ci(std::span<const double> daily_series,
                                          int n_resamples, double level,
                                          double mean_block_length,
                                          std::uint64_t seed) {
  const auto resample_mean = [&daily_series](
                                 const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (std::size_t i : idx)
      s += daily_series[i];
    return s / double(idx.size());
  };
  return stationary_bootstrap_ci_stat(daily_series.size(), n_resamples, level,
                                      mean_block_length, seed, resample_mean);
}

std::string metrics_csv_header() {
  return "model,lead_time,metric,value,ci_low,ci_high";
}

std::string hist_csv_header() { return "model,lead_time,bin,count"; }

} // namespace emoscast
