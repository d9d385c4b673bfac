#ifndef EMOSCAST_DATA_MODEL_HPP
#define EMOSCAST_DATA_MODEL_HPP

// Stations, ensemble forecasts, observations and the immutable dataset
// container they are loaded into, plus CSV ingestion and serialization.
//
// File schemas:
//   stations.csv      station_id,lat,lon,role          role in {observed,unobserved}
//   forecasts.csv     station_id,date,lead_time,f_hres,f_ctrl,f_ens_01..f_ens_50
//   observations.csv  station_id,date,obs
// Dates are ISO-8601 (YYYY-MM-DD); empty value cells mean "missing" and
// the record is skipped; malformed cells reject the row with its number.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "emoscast/dates.hpp"

namespace emoscast {

inline constexpr int kEnsembleMembers = 50;

enum class StationRole { Observed, Unobserved };

struct Station {
  std::string id;
  double latitude = 0.0;  // degrees, [-90, 90]
  double longitude = 0.0; // degrees, [-180, 180]
  StationRole role = StationRole::Observed;
};

struct EnsembleForecast {
  std::string station_id;
  Date valid_date{};
  int lead_time = 1; // days
  double hres = 0.0; // high-resolution run, m/s
  double ctrl = 0.0; // control run, m/s
  std::array<double, kEnsembleMembers> members{};
};

struct Observation {
  std::string station_id;
  Date valid_date{};
  double wind_speed = 0.0; // m/s
};

struct DateRange {
  Date first{};
  Date last{}; // inclusive
  bool contains(Date d) const { return d >= first && d <= last; }
  bool empty() const { return last < first; }
};

class CsvError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Immutable after load; lookups are keyed exactly as the files are.
class Dataset {
public:
  Dataset(std::vector<Station> stations,
          std::vector<EnsembleForecast> forecasts,
          std::vector<Observation> observations);

  const std::vector<Station>& stations() const { return stations_; }
  const std::vector<EnsembleForecast>& forecasts() const { return forecasts_; }
  const std::vector<Observation>& observations() const {
    return observations_;
  }

  const Station* find_station(const std::string& id) const;
  const EnsembleForecast* find_forecast(const std::string& station_id,
                                        Date valid_date, int lead_time) const;
  const Observation* find_observation(const std::string& station_id,
                                      Date valid_date) const;

  // Station ids by role, sorted.
  std::vector<std::string> station_ids(StationRole role) const;

  // Inclusive span of forecast valid dates; nullopt when empty.
  std::optional<DateRange> forecast_date_span() const;

private:
  std::vector<Station> stations_;
  std::vector<EnsembleForecast> forecasts_;
  std::vector<Observation> observations_;
  std::map<std::string, std::size_t> station_index_;
  std::map<std::tuple<std::string, Date, int>, std::size_t> forecast_index_;
  std::map<std::pair<std::string, Date>, std::size_t> observation_index_;
};

// Loads and cross-references the three CSV files.  Throws CsvError with
// the offending file and row number on schema violations, duplicate
// keys, unknown stations, unparseable numerics, or negative wind speeds.
Dataset load_dataset(const std::string& forecast_file,
                     const std::string& observation_file,
                     const std::string& station_file);

// Re-serializes a dataset into the same three schemas.
void write_station_csv(const Dataset& dataset, const std::string& path);
void write_forecast_csv(const Dataset& dataset, const std::string& path);
void write_observation_csv(const Dataset& dataset, const std::string& path);

// All (forecast, observation) pairs for the stations and window where
// both records exist, ordered by station id then date.
std::vector<std::pair<const EnsembleForecast*, const Observation*>>
complete_cases(const Dataset& dataset,
               const std::vector<std::string>& station_ids,
               const DateRange& dates, int lead_time);

// Shortest round-trip decimal rendering of a double.
std::string format_double(double value);

} // namespace emoscast

#endif
