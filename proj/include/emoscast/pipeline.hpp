#ifndef EMOSCAST_PIPELINE_HPP
#define EMOSCAST_PIPELINE_HPP

// End-to-end experiment driver: loads (or simulates) a dataset, runs
// rolling per-lead-time fits for the requested model variants,
// interpolates parameters to unobserved stations, scores the validation
// period at observed and unobserved stations separately, and emits
// score, parameter, cluster and histogram CSVs.
//
// Output layout under output_dir:
//   observed/scores.csv        per-case records
//   observed/scores_agg.csv    model,lead_time,metric,value,ci_low,ci_high
//   observed/pit_hist.csv      model,lead_time,bin,count
//   observed/rank_hist.csv     raw-ensemble ranks
//   unobserved/...             same four files
//   params.csv                 date,lead_time,group_id,a0..b1,objective,n_cases
//   clusters.csv               date,lead_time,station_id,cluster_id,role,distance_to_mean

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emoscast/clustering.hpp"
#include "emoscast/synthetic.hpp"
#include "emoscast/verification.hpp"

namespace emoscast {

// Model variants in canonical emission order.
enum class ModelId { Raw, Regional, Local, SemilocalOQ, SemilocalFQ, SemilocalFF };

const char* model_name(ModelId id);
std::optional<ModelId> parse_model_name(const std::string& name);

struct RunConfig {
  std::string stations_file;
  std::string forecasts_file;
  std::string observations_file;
  std::string ground_truth_file; // written by simulate
  std::string output_dir = "out";

  std::vector<ModelId> models = {ModelId::Raw, ModelId::Regional,
                                 ModelId::Local, ModelId::SemilocalOQ,
                                 ModelId::SemilocalFQ, ModelId::SemilocalFF};
  int window_days = 60;
  int clusters = 20;
  int n_obs_quantile = 24;
  int n_fcst_quantile = 40;
  FeatureKind assignment_features = FeatureKind::FcstRaw;
  bool zscore_features = false;
  std::vector<int> lead_times = {1};
  std::optional<DateRange> validation; // required for fit/verify stages
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  double alpha = kDefaultAlpha;
  int bootstrap_samples = 2000;
  double bootstrap_level = 0.95;
  double mean_block_length = 0.0; // 0 -> ceil(L^(1/3))
  int pit_bins = kDefaultPitBins;

  std::optional<SyntheticConfig> synthetic;
};

// Reads the flat JSON config; unknown keys are rejected.  Throws
// std::runtime_error naming the file on I/O or schema problems.
RunConfig load_run_config(const std::string& path);

// Restrict to one lead time / one model (CLI overrides).
void restrict_lead_time(RunConfig& config, int lead_time);
void restrict_model(RunConfig& config, const std::string& name);

// Generates the synthetic dataset of config.synthetic and writes the
// three data CSVs plus ground_truth.csv to the configured paths.
void run_simulate(const RunConfig& config);

enum class Stage {
  Fit,         // rolling group fits, params.csv
  Interpolate, // + unobserved assignments, clusters.csv
  Verify       // + validation scores, aggregate tables, histograms
};

struct MetricKey {
  std::string model;
  int lead_time = 0;
  std::string role; // "observed" | "unobserved"
  std::string metric;
  auto operator<=>(const MetricKey&) const = default;
};

struct MetricValue {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct PipelineResult {
  std::map<MetricKey, MetricValue> metrics;
  // raw CSV rows, one string per line, as written to disk
  std::vector<std::string> params_rows;
  std::vector<std::string> cluster_rows;
  std::map<std::string, std::vector<std::string>> score_rows; // by role
};

// Runs the requested stage over all configured lead times and the
// validation date range.  Per-date fit failures are reported to stderr
// and the (model, date) is skipped; anything structural throws.
PipelineResult run_pipeline(const RunConfig& config, Stage stage);

} // namespace emoscast

#endif
