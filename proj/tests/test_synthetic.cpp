#include <doctest.h>

#include <cmath>

#include "emoscast/rng.hpp"
#include "emoscast/synthetic.hpp"
#include "emoscast/tn_dist.hpp"
#include "test_util.hpp"

using namespace emoscast;

TEST_CASE("generation is deterministic per seed") {
  SyntheticConfig config = default_synthetic_config();
  config.n_stations = 6;
  config.n_unobserved = 2;
  config.n_days = 30;
  config.lead_times = {1, 3};
  config.seed = 12;
  const SyntheticResult a = generate_dataset(config);
  const SyntheticResult b = generate_dataset(config);
  REQUIRE(a.dataset.forecasts().size() == b.dataset.forecasts().size());
  for (std::size_t i = 0; i < a.dataset.forecasts().size(); ++i) {
    CHECK(a.dataset.forecasts()[i].hres == b.dataset.forecasts()[i].hres);
    CHECK(a.dataset.forecasts()[i].members ==
          b.dataset.forecasts()[i].members);
  }
  REQUIRE(a.dataset.observations().size() == b.dataset.observations().size());
  for (std::size_t i = 0; i < a.dataset.observations().size(); ++i)
    CHECK(a.dataset.observations()[i].wind_speed ==
          b.dataset.observations()[i].wind_speed);

  SUBCASE("roles and regimes are assigned as configured") {
    CHECK(a.dataset.station_ids(StationRole::Observed).size() == 4);
    CHECK(a.dataset.station_ids(StationRole::Unobserved).size() == 2);
    CHECK(a.ground_truth.size() == 6);
  }
}

TEST_CASE("zero spread with b1 = 0 degenerates to a shared member value") {
  SyntheticConfig config;
  config.n_stations = 1;
  config.n_unobserved = 0;
  config.n_days = 300;
  config.lead_times = {1};
  config.seed = 3;
  RegimeSpec regime;
  regime.id = "degenerate";
  regime.true_params = {0.4, 0.0, 0.0, 0.9, 0.8, 0.0};
  regime.base_mean = 5.0;
  regime.autocorr = 0.5;
  regime.spread_scale = 0.0;
  regime.signal_sd = 1.2;
  config.regimes = {regime};
  const SyntheticResult fx = generate_dataset(config);

  std::vector<double> pits;
  for (const EnsembleForecast& f : fx.dataset.forecasts()) {
    for (double m : f.members)
      CHECK(m == f.hres); // every draw collapses onto the signal
    CHECK(f.ctrl == f.hres);
    const Observation* o =
        fx.dataset.find_observation(f.station_id, f.valid_date);
    REQUIRE(o != nullptr);
    // obs ~ TN(a0 + a3^2 * signal, b0)
    const TruncNormal law{0.4 + 0.81 * f.hres, 0.8};
    pits.push_back(tn_cdf(law, o->wind_speed));
  }
  CHECK(test_util::ks_uniform(pits) < 0.08); // 300 draws, loose bound
}

TEST_CASE("observations are nonnegative and PIT of the truth is uniform") {
  SyntheticConfig config = default_synthetic_config();
  config.n_stations = 100;
  config.n_unobserved = 0;
  config.n_days = 1000;
  config.lead_times = {1};
  config.seed = 2024;
  const SyntheticResult fx = generate_dataset(config);

  std::vector<double> pits;
  pits.reserve(100000);
  for (const EnsembleForecast& f : fx.dataset.forecasts()) {
    const Observation* o =
        fx.dataset.find_observation(f.station_id, f.valid_date);
    REQUIRE(o != nullptr);
    CHECK(o->wind_speed >= 0.0);
    const TruncNormal law =
        link(fx.ground_truth.at(f.station_id).true_params, f);
    pits.push_back(tn_pit(law, o->wind_speed));
  }
  REQUIRE(pits.size() == 100000);
  CHECK(test_util::ks_uniform(pits) < 0.01);
}

TEST_CASE("missing fraction lands near the configured rate") {
  SyntheticConfig config = default_synthetic_config();
  config.n_stations = 30;
  config.n_unobserved = 5;
  config.n_days = 400;
  config.lead_times = {1, 5};
  config.seed = 77;
  config.missing_fraction = 0.0165;
  const SyntheticResult fx = generate_dataset(config);

  const long total = 30L * 400L * 2L;
  long complete = 0;
  for (const Station& s : fx.dataset.stations())
    for (int day = 0; day < 400; ++day) {
      const Date date = config.start_date + std::chrono::days{day};
      for (int lead : {1, 5})
        if (fx.dataset.find_forecast(s.id, date, lead) &&
            fx.dataset.find_observation(s.id, date))
          ++complete;
    }
  const double incomplete = double(total - complete) / double(total);
  CHECK(incomplete == doctest::Approx(0.0165).epsilon(0.13)); // +-0.2 pp
  CHECK(std::abs(incomplete - 0.0165) < 0.002);
}

TEST_CASE("same regime and seed produce identical streams") {
  const RegimeSpec regime = default_synthetic_config().regimes[0];
  const StationSeries a =
      simulate_station(regime, 50, make_date(2020, 1, 1), {1, 5}, 424242);
  const StationSeries b =
      simulate_station(regime, 50, make_date(2020, 1, 1), {1, 5}, 424242);
  REQUIRE(a.forecasts.size() == b.forecasts.size());
  for (std::size_t i = 0; i < a.forecasts.size(); ++i) {
    CHECK(a.forecasts[i].hres == b.forecasts[i].hres);
    CHECK(a.forecasts[i].members == b.forecasts[i].members);
  }
  for (std::size_t i = 0; i < a.observations.size(); ++i)
    CHECK(a.observations[i].wind_speed == b.observations[i].wind_speed);
}

TEST_CASE("config validation") {
  SyntheticConfig config = default_synthetic_config();
  config.n_unobserved = config.n_stations;
  CHECK_THROWS_AS(generate_dataset(config), std::invalid_argument);
  config = default_synthetic_config();
  config.regimes.clear();
  CHECK_THROWS_AS(generate_dataset(config), std::invalid_argument);
  config = default_synthetic_config();
  config.missing_fraction = 1.5;
  CHECK_THROWS_AS(generate_dataset(config), std::invalid_argument);
}

TEST_CASE("ground truth file carries the regime parameters") {
  SyntheticConfig config = default_synthetic_config();
  config.n_stations = 4;
  config.n_unobserved = 1;
  config.n_days = 5;
  config.lead_times = {1};
  const SyntheticResult fx = generate_dataset(config);
  test_util::TempDir dir("synthetic-gt");
  write_ground_truth_csv(fx, dir.str("ground_truth.csv"));
  const std::string content =
      test_util::read_file(dir.str("ground_truth.csv"));
  CHECK(content.find("station_id,regime_id,a0,a1,a2,a3,b0,b1") !=
        std::string::npos);
  CHECK(content.find("calm") != std::string::npos);
  CHECK(content.find("windy") != std::string::npos);
}
