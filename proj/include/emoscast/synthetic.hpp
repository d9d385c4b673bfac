#ifndef EMOSCAST_SYNTHETIC_HPP
#define EMOSCAST_SYNTHETIC_HPP

// Synthetic station networks with known ground truth.  Each station
// follows a regime: an AR(1) weather signal (floored at zero) around a
// base climatology, ensemble members scattered around the signal, and
// observations drawn from the truncated normal that the regime's true
// EMOS parameters assign to the realized forecast.  The true model is
// therefore the exact data-generating law at the first configured lead
// time, which is what the recovery and calibration oracles use; longer
// leads add forecast noise and widen the spread.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "emoscast/data_model.hpp"
#include "emoscast/emos.hpp"

namespace emoscast {

struct RegimeSpec {
  std::string id = "regime";
  EmosParams true_params = default_init();
  // forecast process
  double base_mean = 5.0;     // m/s, climatological signal level
  double autocorr = 0.7;      // day-to-day AR(1) coefficient, [0, 1)
  double spread_scale = 1.0;  // m/s, member scatter around the signal
  double signal_sd = 1.5;     // m/s, stationary sd of the signal
  // station placement box, degrees
  double lat_min = 45.0, lat_max = 55.0;
  double lon_min = 5.0, lon_max = 15.0;
};

struct SyntheticConfig {
  int n_stations = 52;
  int n_unobserved = 12;
  int n_days = 400;
  Date start_date = make_date(2020, 1, 1);
  std::vector<int> lead_times = {1, 5, 10};
  std::vector<RegimeSpec> regimes;
  std::uint64_t seed = 1;
  double missing_fraction = 0.0; // cases made incomplete, in expectation
};

// Desk-scale default: two regimes differing in bias and spread.
SyntheticConfig default_synthetic_config();

struct StationSeries {
  std::vector<EnsembleForecast> forecasts; // station_id filled by caller
  std::vector<Observation> observations;
};

// One station's forecast and observation stream.  Two stations sharing
// a regime and a seed produce identical streams.
StationSeries simulate_station(const RegimeSpec& regime, int n_days,
                               Date start_date,
                               const std::vector<int>& lead_times,
                               std::uint64_t station_seed);

struct SyntheticResult {
  Dataset dataset;
  std::map<std::string, RegimeSpec> ground_truth; // station -> regime
};

SyntheticResult generate_dataset(const SyntheticConfig& config);

// ground_truth.csv: station_id,regime_id,a0,a1,a2,a3,b0,b1
void write_ground_truth_csv(const SyntheticResult& result,
                            const std::string& path);

} // namespace emoscast

#endif
