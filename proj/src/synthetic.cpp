#include "emoscast/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "emoscast/rng.hpp"
#include "emoscast/tn_dist.hpp"

namespace emoscast {

SyntheticConfig default_synthetic_config() {
  SyntheticConfig config;
  config.n_stations = 52;
  config.n_unobserved = 12;
  config.n_days = 400;
  config.lead_times = {1, 5, 10};
  config.seed = 1;

  RegimeSpec calm;
  calm.id = "calm";
  calm.true_params = {0.3, 0.0, 0.0, 1.0, 0.4, 0.8};
  calm.base_mean = 5.0;
  calm.autocorr = 0.7;
  calm.spread_scale = 1.0;
  calm.signal_sd = 1.5;
  calm.lat_min = 45.0;
  calm.lat_max = 50.0;
  calm.lon_min = 5.0;
  calm.lon_max = 10.0;

  RegimeSpec windy;
  windy.id = "windy";
  windy.true_params = {2.0, 0.0, 0.0, 0.85, 1.0, 1.3};
  windy.base_mean = 9.0;
  windy.autocorr = 0.7;
  windy.spread_scale = 2.2;
  windy.signal_sd = 2.0;
  windy.lat_min = 55.0;
  windy.lat_max = 60.0;
  windy.lon_min = 15.0;
  windy.lon_max = 20.0;

  config.regimes = {calm, windy};
  return config;
}

namespace {

void validate_config(const SyntheticConfig& config) {
  if (config.n_stations < 1)
    throw std::invalid_argument("synthetic: need at least one station");
  if (config.n_unobserved < 0 || config.n_unobserved >= config.n_stations)
    throw std::invalid_argument("synthetic: n_unobserved must be < n_stations");
  if (config.n_days < 1)
    throw std::invalid_argument("synthetic: need at least one day");
  if (config.lead_times.empty())
    throw std::invalid_argument("synthetic: need at least one lead time");
  if (config.regimes.empty())
    throw std::invalid_argument("synthetic: need at least one regime");
  if (config.missing_fraction < 0.0 || config.missing_fraction >= 1.0)
    throw std::invalid_argument("synthetic: missing_fraction in [0, 1)");
  for (const RegimeSpec& r : config.regimes) {
    if (!(r.spread_scale >= 0.0))
      throw std::invalid_argument("synthetic: spread_scale must be >= 0");
    if (!(r.autocorr >= 0.0 && r.autocorr < 1.0))
      throw std::invalid_argument("synthetic: autocorr must be in [0, 1)");
    if (!r.true_params.finite())
      throw std::invalid_argument("synthetic: non-finite true params");
  }
}

std::string station_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%04d", index + 1);
  return buf;
}

} // namespace

StationSeries simulate_station(const RegimeSpec& regime, int n_days,
                               Date start_date,
                               const std::vector<int>& lead_times,
                               std::uint64_t station_seed) {
  Rng rng(station_seed);
  StationSeries series;

  // Stationary AR(1) signal, floored at zero like the observable.
  std::vector<double> signal(std::size_t(n_days), 0.0);
  double w = regime.base_mean + regime.signal_sd * rng.normal();
  const double innovation =
      regime.signal_sd * std::sqrt(1.0 - regime.autocorr * regime.autocorr);
  for (int t = 0; t < n_days; ++t) {
    signal[std::size_t(t)] = std::max(0.0, w);
    w = regime.base_mean + regime.autocorr * (w - regime.base_mean) +
        innovation * rng.normal();
  }

  const int first_lead = lead_times.front();
  series.forecasts.reserve(std::size_t(n_days) * lead_times.size());
  series.observations.reserve(std::size_t(n_days));
  for (int t = 0; t < n_days; ++t) {
    const Date date = start_date + std::chrono::days{t};
    std::size_t anchor = 0;
    for (int lead : lead_times) {
      // Skill decays with horizon: the forecast center drifts off the
      // signal and the member scatter widens.
      const double center_noise = 0.3 * regime.signal_sd * double(lead - 1);
      const double spread =
          regime.spread_scale * (1.0 + 0.15 * double(lead - 1));
      const double center =
          std::max(0.0, signal[std::size_t(t)] + center_noise * rng.normal());

      EnsembleForecast f;
      f.valid_date = date;
      f.lead_time = lead;
      f.hres = std::max(0.0, center + 0.8 * spread * rng.normal());
      f.ctrl = std::max(0.0, center + spread * rng.normal());
      for (double& member : f.members)
        member = std::max(0.0, center + spread * rng.normal());
      series.forecasts.push_back(std::move(f));
      if (lead == first_lead)
        anchor = series.forecasts.size() - 1;
    }
    // The observation follows the true model applied to the realized
    // first-lead forecast, sampled by inverse CDF.
    const TruncNormal law = link(regime.true_params, series.forecasts[anchor]);
    series.observations.push_back(
        {"", date, tn_quantile(law, rng.uniform01())});
  }
  return series;
}

SyntheticResult generate_dataset(const SyntheticConfig& config) {
  validate_config(config);

  std::vector<Station> stations;
  std::vector<EnsembleForecast> forecasts;
  std::vector<Observation> observations;
  std::map<std::string, RegimeSpec> ground_truth;

  const int n_observed = config.n_stations - config.n_unobserved;
  for (int i = 0; i < config.n_stations; ++i) {
    const RegimeSpec& regime =
        config.regimes[std::size_t(i) % config.regimes.size()];
    const std::string id = station_name(i);

    Rng coord_rng(mix_seed(config.seed, 0x10000u + std::uint64_t(i)));
    Station s;
    s.id = id;
    s.latitude =
        regime.lat_min + (regime.lat_max - regime.lat_min) * coord_rng.uniform01();
    s.longitude =
        regime.lon_min + (regime.lon_max - regime.lon_min) * coord_rng.uniform01();
    s.role = i < n_observed ? StationRole::Observed : StationRole::Unobserved;
    stations.push_back(std::move(s));
    ground_truth.emplace(id, regime);

    StationSeries series =
        simulate_station(regime, config.n_days, config.start_date,
                         config.lead_times, mix_seed(config.seed, std::uint64_t(i)));
    for (EnsembleForecast& f : series.forecasts) {
      f.station_id = id;
      forecasts.push_back(std::move(f));
    }
    for (Observation& o : series.observations) {
      o.station_id = id;
      observations.push_back(std::move(o));
    }
  }

  // Missingness: forecasts and observations each drop with probability
  // q/2, so a case is incomplete with probability ~q (observation drops
  // knock out every lead of that station-day).
  if (config.missing_fraction > 0.0) {
    const double q_half = 0.5 * config.missing_fraction;
    Rng rng(mix_seed(config.seed, 0xD0B5ULL));
    std::vector<EnsembleForecast> kept_forecasts;
    kept_forecasts.reserve(forecasts.size());
    for (EnsembleForecast& f : forecasts)
      if (!rng.bernoulli(q_half))
        kept_forecasts.push_back(std::move(f));
    std::vector<Observation> kept_observations;
    kept_observations.reserve(observations.size());
    for (Observation& o : observations)
      if (!rng.bernoulli(q_half))
        kept_observations.push_back(std::move(o));
    forecasts = std::move(kept_forecasts);
    observations = std::move(kept_observations);
  }

  return {Dataset(std::move(stations), std::move(forecasts),
                  std::move(observations)),
          std::move(ground_truth)};
}

void write_ground_truth_csv(const SyntheticResult& result,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw CsvError("cannot write " + path);
  out << "station_id,regime_id,a0,a1,a2,a3,b0,b1\n";
  for (const auto& [station, regime] : result.ground_truth) {
    const EmosParams& p = regime.true_params;
    out << station << ',' << regime.id;
    for (double v : {p.a0, p.a1, p.a2, p.a3, p.b0, p.b1})
      out << ',' << format_double(v);
    out << '\n';
  }
}

} // namespace emoscast
