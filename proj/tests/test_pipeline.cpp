#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "emoscast/pipeline.hpp"
#include "test_util.hpp"

using namespace emoscast;
using test_util::TempDir;

namespace {

// Small two-regime run: 8 observed + 2 unobserved stations, one lead,
// a 60-day window and a short validation span.
std::string small_config_json(const std::filesystem::path& dir,
                              const std::string& models,
                              int clusters = 2,
                              const std::string& extra = "") {
  std::ostringstream json;
  json << "{\n"
       << "  \"data_dir\": \"" << (dir / "data").string() << "\",\n"
       << "  \"output_dir\": \"" << (dir / "out").string() << "\",\n"
       << "  \"models\": [" << models << "],\n"
       << "  \"window_days\": 60,\n"
       << "  \"clusters\": " << clusters << ",\n"
       << "  \"lead_times\": [1, 2],\n"
       << "  \"validation_start\": \"2020-03-02\",\n"
       << "  \"validation_end\": \"2020-03-11\",\n"
       << "  \"seed\": 7,\n"
       << "  \"bootstrap\": {\"samples\": 200, \"level\": 0.95},\n"
       << extra
       << "  \"synthetic\": {\n"
       << "    \"n_stations\": 10, \"n_unobserved\": 2, \"n_days\": 75,\n"
       << "    \"start_date\": \"2020-01-01\", \"lead_times\": [1, 2],\n"
       << "    \"seed\": 7, \"regimes\": [\n"
       << "      {\"id\": \"calm\", \"a0\": 0.3, \"a1\": 0, \"a2\": 0, "
          "\"a3\": 1.0, \"b0\": 0.4, \"b1\": 0.8, \"base_mean\": 5, "
          "\"autocorr\": 0.7, \"spread_scale\": 1.0, \"lat_range\": [45, 50], "
          "\"lon_range\": [5, 10]},\n"
       << "      {\"id\": \"windy\", \"a0\": 2.0, \"a1\": 0, \"a2\": 0, "
          "\"a3\": 0.85, \"b0\": 1.0, \"b1\": 1.3, \"base_mean\": 9, "
          "\"autocorr\": 0.7, \"spread_scale\": 2.2, \"lat_range\": [55, 60], "
          "\"lon_range\": [15, 20]}\n"
       << "    ]\n"
       << "  }\n"
       << "}\n";
  return json.str();
}

RunConfig write_and_load(const TempDir& dir, const std::string& json) {
  test_util::write_file(dir.str("run.json"), json);
  return load_run_config(dir.str("run.json"));
}

} // namespace

TEST_CASE("config loading") {
  TempDir dir("pipeline-config");

  SUBCASE("defaults fill unspecified keys") {
    const RunConfig config = write_and_load(
        dir, small_config_json(dir.path(), "\"regional\""));
    CHECK(config.window_days == 60);
    CHECK(config.alpha == doctest::Approx(2.0 / 53.0));
    CHECK(config.bootstrap_samples == 200);
    CHECK(config.models == std::vector<ModelId>{ModelId::Regional});
    REQUIRE(config.synthetic.has_value());
    CHECK(config.synthetic->n_stations == 10);
  }
  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_WITH_AS(
        write_and_load(dir, "{\"no_such_key\": 1}"),
        doctest::Contains("unknown key"), std::runtime_error);
  }
  SUBCASE("unknown model names are rejected") {
    CHECK_THROWS_WITH_AS(
        write_and_load(dir, "{\"models\": [\"kriging\"]}"),
        doctest::Contains("unknown model"), std::runtime_error);
  }
  SUBCASE("missing file names the path") {
    CHECK_THROWS_WITH_AS(load_run_config(dir.str("nope.json")),
                         doctest::Contains("nope.json"), std::runtime_error);
  }
  SUBCASE("restrictions check membership") {
    RunConfig config = write_and_load(
        dir, small_config_json(dir.path(), "\"regional\", \"semilocal_ff\""));
    restrict_model(config, "semilocal_ff");
    CHECK(config.models == std::vector<ModelId>{ModelId::SemilocalFF});
    CHECK_THROWS_AS(restrict_model(config, "local"), std::runtime_error);
    restrict_lead_time(config, 2);
    CHECK(config.lead_times == std::vector<int>{2});
    CHECK_THROWS_AS(restrict_lead_time(config, 9), std::runtime_error);
  }
}

TEST_CASE("simulate writes the four data files") {
  TempDir dir("pipeline-sim");
  const RunConfig config =
      write_and_load(dir, small_config_json(dir.path(), "\"regional\""));
  run_simulate(config);
  CHECK(std::filesystem::exists(config.stations_file));
  CHECK(std::filesystem::exists(config.forecasts_file));
  CHECK(std::filesystem::exists(config.observations_file));
  CHECK(std::filesystem::exists(config.ground_truth_file));
  const Dataset ds = load_dataset(config.forecasts_file,
                                  config.observations_file,
                                  config.stations_file);
  CHECK(ds.stations().size() == 10);
  CHECK(ds.forecasts().size() == 10 * 75 * 2);
}

TEST_CASE("full pipeline writes scores, params, clusters and histograms") {
  TempDir dir("pipeline-full");
  const RunConfig config = write_and_load(
      dir, small_config_json(dir.path(),
                             "\"raw\", \"regional\", \"local\", "
                             "\"semilocal_ff\""));
  run_simulate(config);
  const PipelineResult result = run_pipeline(config, Stage::Verify);

  for (const char* role : {"observed", "unobserved"}) {
    for (const char* name :
         {"scores.csv", "scores_agg.csv", "pit_hist.csv", "rank_hist.csv"})
      CHECK(std::filesystem::exists(std::filesystem::path(config.output_dir) /
                                    role / name));
    const MetricKey raw_key{"raw", 1, role, "crps"};
    const MetricKey semi_key{"semilocal_ff", 1, role, "crps"};
    REQUIRE(result.metrics.count(raw_key));
    REQUIRE(result.metrics.count(semi_key));
    // regime-aware post-processing beats the raw ensemble (a pooled
    // regional fit need not, on this deliberately two-regime network)
    CHECK(result.metrics.at(semi_key).value <
          result.metrics.at(raw_key).value);
    CHECK(result.metrics.count(MetricKey{"regional", 1, role,
                                         "crpss_vs_raw"}));
    CHECK(result.metrics.count(MetricKey{"semilocal_ff", 1, role,
                                         "crpss_vs_regional"}));
    CHECK(result.metrics.count(MetricKey{"local", 2, role, "coverage"}));
  }
  CHECK(std::filesystem::exists(
      std::filesystem::path(config.output_dir) / "params.csv"));
  CHECK(std::filesystem::exists(
      std::filesystem::path(config.output_dir) / "clusters.csv"));
  CHECK(!result.params_rows.empty());
  CHECK(!result.cluster_rows.empty());

  SUBCASE("semilocal with one cluster reproduces the regional scores") {
    const RunConfig k1 = write_and_load(
        dir, small_config_json(dir.path(), "\"regional\", \"semilocal_ff\"",
                               1));
    const PipelineResult r = run_pipeline(k1, Stage::Verify);
    for (const char* role : {"observed", "unobserved"})
      for (int lead : {1, 2}) {
        const auto reg = r.metrics.at(MetricKey{"regional", lead, role,
                                                "crps"});
        const auto semi = r.metrics.at(MetricKey{"semilocal_ff", lead, role,
                                                 "crps"});
        CHECK(reg.value == semi.value);
      }
  }
}

TEST_CASE("stage outputs are nested") {
  TempDir dir("pipeline-stages");
  const RunConfig config = write_and_load(
      dir, small_config_json(dir.path(), "\"regional\", \"semilocal_ff\""));
  run_simulate(config);

  const PipelineResult fit = run_pipeline(config, Stage::Fit);
  CHECK(!fit.params_rows.empty());
  CHECK(fit.metrics.empty());
  CHECK(std::filesystem::exists(
      std::filesystem::path(config.output_dir) / "params.csv"));
  CHECK(!std::filesystem::exists(
      std::filesystem::path(config.output_dir) / "observed" / "scores.csv"));

  const PipelineResult interp = run_pipeline(config, Stage::Interpolate);
  CHECK(!interp.cluster_rows.empty());
  CHECK(interp.metrics.empty());

  // unobserved stations appear in the cluster report only past Fit
  bool fit_has_unobserved = false;
  for (const std::string& row : fit.cluster_rows)
    if (row.find("unobserved") != std::string::npos)
      fit_has_unobserved = true;
  CHECK_FALSE(fit_has_unobserved);
  bool interp_has_unobserved = false;
  for (const std::string& row : interp.cluster_rows)
    if (row.find("unobserved") != std::string::npos)
      interp_has_unobserved = true;
  CHECK(interp_has_unobserved);
}

TEST_CASE("cli exit codes and overrides") {
  TempDir dir("pipeline-cli");
  test_util::write_file(dir.str("run.json"),
                        small_config_json(dir.path(), "\"regional\""));

  SUBCASE("help exits zero") {
    CHECK(test_util::run_cli("--help", dir.str("log")) == 0);
  }
  SUBCASE("unknown flags exit 2") {
    CHECK(test_util::run_cli("pipeline --config x --frobnicate",
                             dir.str("log")) == 2);
    CHECK(test_util::run_cli("no-such-subcommand", dir.str("log")) == 2);
  }
  SUBCASE("missing config exits 1 and names the path") {
    const int code = test_util::run_cli(
        "pipeline --config " + dir.str("missing.json"), dir.str("log"));
    CHECK(code == 1);
    CHECK(test_util::read_file(dir.str("log")).find("missing.json") !=
          std::string::npos);
  }
  SUBCASE("simulate then a lead-restricted pipeline") {
    REQUIRE(test_util::run_cli("simulate --config " + dir.str("run.json"),
                               dir.str("log")) == 0);
    REQUIRE(test_util::run_cli("pipeline --config " + dir.str("run.json") +
                                   " --lead-time 2",
                               dir.str("log")) == 0);
    const std::string scores = test_util::read_file(
        (dir.path() / "out" / "observed" / "scores.csv").string());
    CHECK(scores.find("regional,2,") != std::string::npos);
    CHECK(scores.find("regional,1,") == std::string::npos);
  }
}
