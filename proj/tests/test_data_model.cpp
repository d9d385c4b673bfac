#include <doctest.h>

#include <sstream>

#include "emoscast/data_model.hpp"
#include "test_util.hpp"

using namespace emoscast;
using test_util::TempDir;
using test_util::write_file;

namespace {

std::string station_csv() {
  return "station_id,lat,lon,role\n"
         "A,47.5,19.0,observed\n"
         "B,48.2,16.4,observed\n"
         "C,52.5,13.4,unobserved\n";
}

std::string forecast_header_line() {
  std::string h = "station_id,date,lead_time,f_hres,f_ctrl";
  for (int k = 1; k <= 50; ++k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, ",f_ens_%02d", k);
    h += buf;
  }
  return h;
}

std::string forecast_row(const std::string& station, const std::string& date,
                         int lead, double hres, double ctrl, double member) {
  std::ostringstream row;
  row << station << ',' << date << ',' << lead << ',' << hres << ',' << ctrl;
  for (int k = 0; k < 50; ++k)
    row << ',' << member;
  return row.str();
}

struct Fixture {
  TempDir dir{"data-model"};
  std::string stations = dir.str("stations.csv");
  std::string forecasts = dir.str("forecasts.csv");
  std::string observations = dir.str("observations.csv");

  void write(const std::string& forecast_body, const std::string& obs_body,
             const std::string& station_body = station_csv()) {
    write_file(stations, station_body);
    write_file(forecasts, forecast_header_line() + "\n" + forecast_body);
    write_file(observations, "station_id,date,obs\n" + obs_body);
  }

  Dataset load() { return load_dataset(forecasts, observations, stations); }
};

} // namespace

TEST_CASE("well-formed files load and cross-reference") {
  Fixture fx;
  fx.write(forecast_row("A", "2021-03-01", 1, 4.0, 4.2, 3.5) + "\n" +
               forecast_row("A", "2021-03-02", 1, 5.0, 5.1, 4.5) + "\n" +
               forecast_row("B", "2021-03-01", 1, 7.0, 7.3, 6.5) + "\n",
           "A,2021-03-01,3.9\nA,2021-03-02,5.3\nB,2021-03-01,6.1\n");
  const Dataset ds = fx.load();
  CHECK(ds.forecasts().size() == 3);
  CHECK(ds.observations().size() == 3);
  CHECK(ds.stations().size() == 3);
  const EnsembleForecast* f =
      ds.find_forecast("A", make_date(2021, 3, 2), 1);
  REQUIRE(f != nullptr);
  CHECK(f->hres == 5.0);
  CHECK(f->members[49] == 4.5);
  CHECK(ds.find_observation("B", make_date(2021, 3, 1))->wind_speed == 6.1);
  CHECK(ds.find_station("C")->role == StationRole::Unobserved);
}

TEST_CASE("empty value cells mean missing, not zero") {
  Fixture fx;
  fx.write(forecast_row("A", "2021-03-01", 1, 4.0, 4.2, 3.5) + "\n",
           "A,2021-03-01,\nA,2021-03-02,4.4\n");
  const Dataset ds = fx.load();
  CHECK(ds.find_forecast("A", make_date(2021, 3, 1), 1) != nullptr);
  CHECK(ds.find_observation("A", make_date(2021, 3, 1)) == nullptr);
  CHECK(ds.find_observation("A", make_date(2021, 3, 2)) != nullptr);
}

TEST_CASE("ingestion errors carry the offending row") {
  Fixture fx;

  SUBCASE("duplicate forecast key") {
    fx.write(forecast_row("A", "2021-03-01", 1, 4.0, 4.2, 3.5) + "\n" +
                 forecast_row("A", "2021-03-01", 1, 4.1, 4.3, 3.6) + "\n",
             "A,2021-03-01,3.9\n");
    CHECK_THROWS_WITH_AS(fx.load(),
                         doctest::Contains("duplicate forecast key"),
                         CsvError);
  }
  SUBCASE("unknown station id") {
    fx.write(forecast_row("Z", "2021-03-01", 1, 4.0, 4.2, 3.5) + "\n",
             "A,2021-03-01,3.9\n");
    CHECK_THROWS_WITH_AS(fx.load(), doctest::Contains("unknown station"),
                         CsvError);
  }
  SUBCASE("unparseable numeric rejected with its row") {
    fx.write(forecast_row("A", "2021-03-01", 1, 4.0, 4.2, 3.5) + "\n",
             "A,2021-03-01,not-a-number\n");
    CHECK_THROWS_WITH_AS(fx.load(), doctest::Contains(":2:"), CsvError);
  }
  SUBCASE("negative wind speed rejected at load") {
    fx.write(forecast_row("A", "2021-03-01", 1, 4.0, 4.2, 3.5) + "\n",
             "A,2021-03-01,-0.5\n");
    CHECK_THROWS_WITH_AS(fx.load(), doctest::Contains("negative wind speed"),
                         CsvError);
  }
  SUBCASE("wrong header") {
    fx.write(forecast_row("A", "2021-03-01", 1, 4.0, 4.2, 3.5) + "\n",
             "A,2021-03-01,3.9\n", "id,lat,lon,role\nA,1,2,observed\n");
    CHECK_THROWS_WITH_AS(fx.load(), doctest::Contains("unexpected header"),
                         CsvError);
  }
  SUBCASE("wrong column count") {
    write_file(fx.stations, station_csv());
    write_file(fx.forecasts, forecast_header_line() + "\nA,2021-03-01,1,4.0\n");
    write_file(fx.observations, "station_id,date,obs\n");
    CHECK_THROWS_WITH_AS(fx.load(), doctest::Contains("columns"), CsvError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_dataset(fx.dir.str("nope.csv"), fx.observations,
                                 fx.stations),
                    CsvError);
  }
}

TEST_CASE("round trip is lossless for complete rows") {
  Fixture fx;
  fx.write(forecast_row("A", "2021-03-01", 1, 4.125, 4.2, 3.0625) + "\n" +
               forecast_row("B", "2021-03-01", 2, 7.1, 7.3, 6.5) + "\n",
           "A,2021-03-01,3.9\nB,2021-03-01,6.1\n");
  const Dataset first = fx.load();

  TempDir out("data-model-rt");
  write_station_csv(first, out.str("stations.csv"));
  write_forecast_csv(first, out.str("forecasts.csv"));
  write_observation_csv(first, out.str("observations.csv"));
  const Dataset second = load_dataset(
      out.str("forecasts.csv"), out.str("observations.csv"),
      out.str("stations.csv"));

  REQUIRE(second.forecasts().size() == first.forecasts().size());
  for (std::size_t i = 0; i < first.forecasts().size(); ++i) {
    const EnsembleForecast& a = first.forecasts()[i];
    const EnsembleForecast& b = second.forecasts()[i];
    CHECK(a.station_id == b.station_id);
    CHECK(a.valid_date == b.valid_date);
    CHECK(a.lead_time == b.lead_time);
    CHECK(a.hres == b.hres);
    CHECK(a.ctrl == b.ctrl);
    CHECK(a.members == b.members);
  }
  REQUIRE(second.observations().size() == first.observations().size());
  for (std::size_t i = 0; i < first.observations().size(); ++i)
    CHECK(first.observations()[i].wind_speed ==
          second.observations()[i].wind_speed);
}

TEST_CASE("complete_cases pairs forecasts with observations") {
  Fixture fx;
  fx.write(forecast_row("A", "2021-03-01", 1, 4.0, 4.2, 3.5) + "\n" +
               forecast_row("A", "2021-03-02", 1, 5.0, 5.1, 4.5) + "\n" +
               forecast_row("B", "2021-03-01", 1, 7.0, 7.3, 6.5) + "\n" +
               forecast_row("B", "2021-03-02", 1, 7.2, 7.4, 6.6) + "\n",
           "A,2021-03-01,3.9\nA,2021-03-02,5.3\nB,2021-03-01,6.1\n");
  const Dataset ds = fx.load();
  const DateRange all{make_date(2021, 3, 1), make_date(2021, 3, 2)};

  SUBCASE("all present pairs returned, deterministic order") {
    const auto cases = complete_cases(ds, {"B", "A"}, all, 1);
    REQUIRE(cases.size() == 3); // B misses 03-02's observation
    CHECK(cases[0].first->station_id == "A");
    CHECK(cases[1].first->station_id == "A");
    CHECK(cases[2].first->station_id == "B");
    CHECK(cases[0].first->valid_date < cases[1].first->valid_date);
  }
  SUBCASE("missing observation drops only that pair") {
    const auto cases = complete_cases(
        ds, {"B"}, all, 1);
    REQUIRE(cases.size() == 1);
    CHECK(cases[0].second->wind_speed == 6.1);
  }
  SUBCASE("range before the data start is empty") {
    const DateRange early{make_date(2020, 1, 1), make_date(2020, 1, 31)};
    CHECK(complete_cases(ds, {"A", "B"}, early, 1).empty());
  }
  SUBCASE("empty range is empty") {
    const DateRange inverted{make_date(2021, 3, 2), make_date(2021, 3, 1)};
    CHECK(complete_cases(ds, {"A"}, inverted, 1).empty());
  }
  SUBCASE("brute-force count agrees") {
    long expected = 0;
    for (const std::string id : {"A", "B"})
      for (Date d = all.first; d <= all.last; d += std::chrono::days{1})
        if (ds.find_forecast(id, d, 1) && ds.find_observation(id, d))
          ++expected;
    CHECK(std::ssize(complete_cases(ds, {"A", "B"}, all, 1)) == expected);
  }
}
