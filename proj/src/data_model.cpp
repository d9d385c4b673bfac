#include "emoscast/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace emoscast {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream stream(line);
  while (std::getline(stream, cell, ','))
    cells.push_back(cell);
  if (!line.empty() && line.back() == ',')
    cells.emplace_back();
  return cells;
}

[[noreturn]] void fail(const std::string& file, std::size_t row,
                       const std::string& what) {
  throw CsvError(file + ":" + std::to_string(row) + ": " + what);
}

double parse_double(const std::string& cell, const std::string& file,
                    std::size_t row) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    fail(file, row, "unparseable numeric field '" + cell + "'");
  return value;
}

int parse_int(const std::string& cell, const std::string& file,
              std::size_t row) {
  int value = 0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    fail(file, row, "unparseable integer field '" + cell + "'");
  return value;
}

Date parse_date_cell(const std::string& cell, const std::string& file,
                     std::size_t row) {
  try {
    return parse_date(cell);
  } catch (const std::exception& e) {
    fail(file, row, e.what());
  }
}

struct CsvReader {
  std::string path;
  std::ifstream stream;
  std::size_t row = 0;

  explicit CsvReader(const std::string& p) : path(p), stream(p) {
    if (!stream)
      throw CsvError("cannot open " + p);
  }

  void expect_header(const std::string& header) {
    std::string line;
    if (!std::getline(stream, line))
      throw CsvError(path + ": empty file");
    ++row;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line != header)
      fail(path, row, "unexpected header '" + line + "' (want '" + header +
                          "')");
  }

  bool next(std::vector<std::string>& cells) {
    std::string line;
    while (std::getline(stream, line)) {
      ++row;
      if (!line.empty() && line.back() == '\r')
        line.pop_back();
      if (line.empty())
        continue;
      cells = split_csv_line(line);
      return true;
    }
    return false;
  }
};

std::string forecast_header() {
  std::string h = "station_id,date,lead_time,f_hres,f_ctrl";
  for (int k = 1; k <= kEnsembleMembers; ++k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, ",f_ens_%02d", k);
    h += buf;
  }
  return h;
}

} // namespace

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, ptr);
}

Dataset::Dataset(std::vector<Station> stations,
                 std::vector<EnsembleForecast> forecasts,
                 std::vector<Observation> observations)
    : stations_(std::move(stations)), forecasts_(std::move(forecasts)),
      observations_(std::move(observations)) {
  for (std::size_t i = 0; i < stations_.size(); ++i) {
    const Station& s = stations_[i];
    if (!(s.latitude >= -90.0 && s.latitude <= 90.0))
      throw std::invalid_argument("station " + s.id + ": latitude out of range");
    if (!(s.longitude >= -180.0 && s.longitude <= 180.0))
      throw std::invalid_argument("station " + s.id +
                                  ": longitude out of range");
    if (!station_index_.emplace(s.id, i).second)
      throw std::invalid_argument("duplicate station id " + s.id);
  }
  for (std::size_t i = 0; i < forecasts_.size(); ++i) {
    const EnsembleForecast& f = forecasts_[i];
    if (!station_index_.count(f.station_id))
      throw std::invalid_argument("forecast references unknown station " +
                                  f.station_id);
    if (!forecast_index_
             .emplace(std::tuple{f.station_id, f.valid_date, f.lead_time}, i)
             .second)
      throw std::invalid_argument("duplicate forecast key " + f.station_id +
                                  "/" + format_date(f.valid_date) + "/" +
                                  std::to_string(f.lead_time));
  }
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const Observation& o = observations_[i];
    if (!station_index_.count(o.station_id))
      throw std::invalid_argument("observation references unknown station " +
                                  o.station_id);
    if (!observation_index_.emplace(std::pair{o.station_id, o.valid_date}, i)
             .second)
      throw std::invalid_argument("duplicate observation key " + o.station_id +
                                  "/" + format_date(o.valid_date));
  }
}

const Station* Dataset::find_station(const std::string& id) const {
  const auto it = station_index_.find(id);
  return it == station_index_.end() ? nullptr : &stations_[it->second];
}

const EnsembleForecast* Dataset::find_forecast(const std::string& station_id,
                                               Date valid_date,
                                               int lead_time) const {
  const auto it =
      forecast_index_.find(std::tuple{station_id, valid_date, lead_time});
  return it == forecast_index_.end() ? nullptr : &forecasts_[it->second];
}

const Observation* Dataset::find_observation(const std::string& station_id,
                                             Date valid_date) const {
  const auto it = observation_index_.find(std::pair{station_id, valid_date});
  return it == observation_index_.end() ? nullptr : &observations_[it->second];
}

std::vector<std::string> Dataset::station_ids(StationRole role) const {
  std::vector<std::string> ids;
  for (const Station& s : stations_)
    if (s.role == role)
      ids.push_back(s.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::optional<DateRange> Dataset::forecast_date_span() const {
  if (forecasts_.empty())
    return std::nullopt;
  Date lo = forecasts_.front().valid_date;
  Date hi = lo;
  for (const EnsembleForecast& f : forecasts_) {
    lo = std::min(lo, f.valid_date);
    hi = std::max(hi, f.valid_date);
  }
  return DateRange{lo, hi};
}

Dataset load_dataset(const std::string& forecast_file,
                     const std::string& observation_file,
                     const std::string& station_file) {
  std::vector<Station> stations;
  {
    CsvReader reader(station_file);
    reader.expect_header("station_id,lat,lon,role");
    std::vector<std::string> cells;
    while (reader.next(cells)) {
      if (cells.size() != 4)
        fail(station_file, reader.row, "expected 4 columns");
      Station s;
      s.id = cells[0];
      s.latitude = parse_double(cells[1], station_file, reader.row);
      s.longitude = parse_double(cells[2], station_file, reader.row);
      if (cells[3] == "observed")
        s.role = StationRole::Observed;
      else if (cells[3] == "unobserved")
        s.role = StationRole::Unobserved;
      else
        fail(station_file, reader.row, "unknown role '" + cells[3] + "'");
      stations.push_back(std::move(s));
    }
  }

  std::vector<EnsembleForecast> forecasts;
  {
    CsvReader reader(forecast_file);
    reader.expect_header(forecast_header());
    std::vector<std::string> cells;
    std::set<std::tuple<std::string, Date, int>> seen;
    while (reader.next(cells)) {
      if (cells.size() != std::size_t(5 + kEnsembleMembers))
        fail(forecast_file, reader.row,
             "expected " + std::to_string(5 + kEnsembleMembers) + " columns");
      const bool any_empty = std::any_of(
          cells.begin() + 3, cells.end(),
          [](const std::string& c) { return c.empty(); });
      if (any_empty)
        continue; // missing value: key known but no usable record
      EnsembleForecast f;
      f.station_id = cells[0];
      f.valid_date = parse_date_cell(cells[1], forecast_file, reader.row);
      f.lead_time = parse_int(cells[2], forecast_file, reader.row);
      if (!seen.emplace(f.station_id, f.valid_date, f.lead_time).second)
        fail(forecast_file, reader.row,
             "duplicate forecast key " + f.station_id + "/" + cells[1] + "/" +
                 cells[2]);
      f.hres = parse_double(cells[3], forecast_file, reader.row);
      f.ctrl = parse_double(cells[4], forecast_file, reader.row);
      for (int k = 0; k < kEnsembleMembers; ++k)
        f.members[k] = parse_double(cells[5 + k], forecast_file, reader.row);
      if (f.lead_time < 1)
        fail(forecast_file, reader.row, "lead_time must be >= 1");
      const bool negative =
          f.hres < 0.0 || f.ctrl < 0.0 ||
          std::any_of(f.members.begin(), f.members.end(),
                      [](double v) { return v < 0.0; });
      if (negative)
        fail(forecast_file, reader.row, "negative wind speed");
      forecasts.push_back(std::move(f));
    }
  }

  std::vector<Observation> observations;
  {
    CsvReader reader(observation_file);
    reader.expect_header("station_id,date,obs");
    std::vector<std::string> cells;
    std::set<std::pair<std::string, Date>> seen;
    while (reader.next(cells)) {
      if (cells.size() != 3)
        fail(observation_file, reader.row, "expected 3 columns");
      if (cells[2].empty())
        continue; // missing observation
      Observation o;
      o.station_id = cells[0];
      o.valid_date = parse_date_cell(cells[1], observation_file, reader.row);
      if (!seen.emplace(o.station_id, o.valid_date).second)
        fail(observation_file, reader.row,
             "duplicate observation key " + o.station_id + "/" + cells[1]);
      o.wind_speed = parse_double(cells[2], observation_file, reader.row);
      if (o.wind_speed < 0.0)
        fail(observation_file, reader.row, "negative wind speed");
      observations.push_back(std::move(o));
    }
  }

  try {
    return Dataset(std::move(stations), std::move(forecasts),
                   std::move(observations));
  } catch (const std::invalid_argument& e) {
    throw CsvError(e.what());
  }
}

void write_station_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw CsvError("cannot write " + path);
  out << "station_id,lat,lon,role\n";
  for (const Station& s : dataset.stations())
    out << s.id << ',' << format_double(s.latitude) << ','
        << format_double(s.longitude) << ','
        << (s.role == StationRole::Observed ? "observed" : "unobserved")
        << '\n';
}

void write_forecast_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw CsvError("cannot write " + path);
  out << forecast_header() << '\n';
  for (const EnsembleForecast& f : dataset.forecasts()) {
    out << f.station_id << ',' << format_date(f.valid_date) << ','
        << f.lead_time << ',' << format_double(f.hres) << ','
        << format_double(f.ctrl);
    for (double m : f.members)
      out << ',' << format_double(m);
    out << '\n';
  }
}

void write_observation_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw CsvError("cannot write " + path);
  out << "station_id,date,obs\n";
  for (const Observation& o : dataset.observations())
    out << o.station_id << ',' << format_date(o.valid_date) << ','
        << format_double(o.wind_speed) << '\n';
}

std::vector<std::pair<const EnsembleForecast*, const Observation*>>
complete_cases(const Dataset& dataset,
               const std::vector<std::string>& station_ids,
               const DateRange& dates, int lead_time) {
  std::vector<std::pair<const EnsembleForecast*, const Observation*>> cases;
  if (dates.empty())
    return cases;
  std::vector<std::string> ids = station_ids;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (const std::string& id : ids) {
    for (Date d = dates.first; d <= dates.last; d += std::chrono::days{1}) {
      const EnsembleForecast* f = dataset.find_forecast(id, d, lead_time);
      if (!f)
        continue;
      const Observation* o = dataset.find_observation(id, d);
      if (!o)
        continue;
      cases.emplace_back(f, o);
    }
  }
  return cases;
}

} // namespace emoscast
