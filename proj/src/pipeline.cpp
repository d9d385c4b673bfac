#include "emoscast/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "emoscast/rng.hpp"

namespace emoscast {

namespace fs = std::filesystem;
using nlohmann::json;

const char* model_name(ModelId id) {
  switch (id) {
  case ModelId::Raw:
    return "raw";
  case ModelId::Regional:
    return "regional";
  case ModelId::Local:
    return "local";
  case ModelId::SemilocalOQ:
    return "semilocal_oq";
  case ModelId::SemilocalFQ:
    return "semilocal_fq";
  case ModelId::SemilocalFF:
    return "semilocal_ff";
  }
  return "unknown";
}

std::optional<ModelId> parse_model_name(const std::string& name) {
  for (ModelId id : {ModelId::Raw, ModelId::Regional, ModelId::Local,
                     ModelId::SemilocalOQ, ModelId::SemilocalFQ,
                     ModelId::SemilocalFF})
    if (name == model_name(id))
      return id;
  return std::nullopt;
}

namespace {

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "obs_quantile")
    return FeatureKind::ObsQuantile;
  if (name == "fcst_quantile")
    return FeatureKind::FcstQuantile;
  if (name == "fcst_raw")
    return FeatureKind::FcstRaw;
  throw std::runtime_error("unknown feature kind '" + name + "'");
}

OptimMethod parse_method(const std::string& name) {
  if (name == "simplex")
    return OptimMethod::DerivativeFreeSimplex;
  if (name == "quasi_newton")
    return OptimMethod::QuasiNewtonNumericGrad;
  throw std::runtime_error("unknown optimizer method '" + name + "'");
}

void reject_unknown_keys(const json& object, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : object.items())
    if (!known.count(key))
      throw std::runtime_error("config: unknown key '" + key + "' in " +
                               where);
}

RegimeSpec parse_regime(const json& j) {
  reject_unknown_keys(j,
                      {"id", "a0", "a1", "a2", "a3", "b0", "b1", "base_mean",
                       "autocorr", "spread_scale", "signal_sd", "lat_range",
                       "lon_range"},
                      "synthetic.regimes");
  RegimeSpec regime;
  regime.id = j.at("id").get<std::string>();
  regime.true_params = {j.at("a0").get<double>(), j.at("a1").get<double>(),
                        j.at("a2").get<double>(), j.at("a3").get<double>(),
                        j.at("b0").get<double>(), j.at("b1").get<double>()};
  regime.base_mean = j.at("base_mean").get<double>();
  regime.autocorr = j.at("autocorr").get<double>();
  regime.spread_scale = j.at("spread_scale").get<double>();
  if (j.contains("signal_sd"))
    regime.signal_sd = j.at("signal_sd").get<double>();
  const auto lat = j.at("lat_range");
  const auto lon = j.at("lon_range");
  regime.lat_min = lat.at(0).get<double>();
  regime.lat_max = lat.at(1).get<double>();
  regime.lon_min = lon.at(0).get<double>();
  regime.lon_max = lon.at(1).get<double>();
  return regime;
}

SyntheticConfig parse_synthetic(const json& j) {
  reject_unknown_keys(j,
                      {"n_stations", "n_unobserved", "n_days", "start_date",
                       "lead_times", "seed", "missing_fraction", "regimes"},
                      "synthetic");
  SyntheticConfig config;
  config.n_stations = j.at("n_stations").get<int>();
  config.n_unobserved = j.at("n_unobserved").get<int>();
  config.n_days = j.at("n_days").get<int>();
  config.start_date = parse_date(j.at("start_date").get<std::string>());
  config.lead_times = j.at("lead_times").get<std::vector<int>>();
  config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("missing_fraction"))
    config.missing_fraction = j.at("missing_fraction").get<double>();
  config.regimes.clear();
  for (const json& r : j.at("regimes"))
    config.regimes.push_back(parse_regime(r));
  return config;
}

} // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config " + path + ": " + e.what());
  }
  reject_unknown_keys(
      j,
      {"data_dir", "stations_file", "forecasts_file", "observations_file",
       "ground_truth_file", "output_dir", "models", "window_days", "clusters",
       "n_obs_quantile", "n_fcst_quantile", "assignment_features",
       "zscore_features", "lead_times", "validation_start", "validation_end",
       "optimizer", "seed", "alpha", "bootstrap", "pit_bins", "synthetic"},
      "top level");

  RunConfig config;
  if (j.contains("data_dir")) {
    const std::string dir = j.at("data_dir").get<std::string>();
    config.stations_file = dir + "/stations.csv";
    config.forecasts_file = dir + "/forecasts.csv";
    config.observations_file = dir + "/observations.csv";
    config.ground_truth_file = dir + "/ground_truth.csv";
  }
  if (j.contains("stations_file"))
    config.stations_file = j.at("stations_file").get<std::string>();
  if (j.contains("forecasts_file"))
    config.forecasts_file = j.at("forecasts_file").get<std::string>();
  if (j.contains("observations_file"))
    config.observations_file = j.at("observations_file").get<std::string>();
  if (j.contains("ground_truth_file"))
    config.ground_truth_file = j.at("ground_truth_file").get<std::string>();
  if (j.contains("output_dir"))
    config.output_dir = j.at("output_dir").get<std::string>();

  if (j.contains("models")) {
    config.models.clear();
    for (const json& m : j.at("models")) {
      const auto id = parse_model_name(m.get<std::string>());
      if (!id)
        throw std::runtime_error("config: unknown model '" +
                                 m.get<std::string>() + "'");
      config.models.push_back(*id);
    }
  }
  if (j.contains("window_days"))
    config.window_days = j.at("window_days").get<int>();
  if (j.contains("clusters"))
    config.clusters = j.at("clusters").get<int>();
  if (j.contains("n_obs_quantile"))
    config.n_obs_quantile = j.at("n_obs_quantile").get<int>();
  if (j.contains("n_fcst_quantile"))
    config.n_fcst_quantile = j.at("n_fcst_quantile").get<int>();
  if (j.contains("assignment_features"))
    config.assignment_features =
        parse_feature_kind(j.at("assignment_features").get<std::string>());
  if (j.contains("zscore_features"))
    config.zscore_features = j.at("zscore_features").get<bool>();
  if (j.contains("lead_times"))
    config.lead_times = j.at("lead_times").get<std::vector<int>>();
  if (j.contains("validation_start") != j.contains("validation_end"))
    throw std::runtime_error(
        "config: validation_start and validation_end go together");
  if (j.contains("validation_start"))
    config.validation =
        DateRange{parse_date(j.at("validation_start").get<std::string>()),
                  parse_date(j.at("validation_end").get<std::string>())};
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    reject_unknown_keys(
        o, {"method", "max_iterations", "tolerance", "restarts"}, "optimizer");
    if (o.contains("method"))
      config.optimizer.method = parse_method(o.at("method").get<std::string>());
    if (o.contains("max_iterations"))
      config.optimizer.max_iterations = o.at("max_iterations").get<int>();
    if (o.contains("tolerance"))
      config.optimizer.tolerance = o.at("tolerance").get<double>();
    if (o.contains("restarts"))
      config.optimizer.simplex_restarts = o.at("restarts").get<int>();
  }
  if (j.contains("seed"))
    config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("alpha"))
    config.alpha = j.at("alpha").get<double>();
  if (j.contains("bootstrap")) {
    const json& b = j.at("bootstrap");
    reject_unknown_keys(b, {"samples", "level", "mean_block_length"},
                        "bootstrap");
    if (b.contains("samples"))
      config.bootstrap_samples = b.at("samples").get<int>();
    if (b.contains("level"))
      config.bootstrap_level = b.at("level").get<double>();
    if (b.contains("mean_block_length"))
      config.mean_block_length = b.at("mean_block_length").get<double>();
  }
  if (j.contains("pit_bins"))
    config.pit_bins = j.at("pit_bins").get<int>();
  if (j.contains("synthetic"))
    config.synthetic = parse_synthetic(j.at("synthetic"));
  return config;
}

void restrict_lead_time(RunConfig& config, int lead_time) {
  if (std::find(config.lead_times.begin(), config.lead_times.end(),
                lead_time) == config.lead_times.end())
    throw std::runtime_error("lead time " + std::to_string(lead_time) +
                             " is not in the configured lead_times");
  config.lead_times = {lead_time};
}

void restrict_model(RunConfig& config, const std::string& name) {
  const auto id = parse_model_name(name);
  if (!id)
    throw std::runtime_error("unknown model '" + name + "'");
  if (std::find(config.models.begin(), config.models.end(), *id) ==
      config.models.end())
    throw std::runtime_error("model '" + name +
                             "' is not in the configured models");
  config.models = {*id};
}

void run_simulate(const RunConfig& config) {
  if (!config.synthetic)
    throw std::runtime_error("config has no 'synthetic' section");
  if (config.stations_file.empty() || config.forecasts_file.empty() ||
      config.observations_file.empty())
    throw std::runtime_error("config: data file paths are required");
  const SyntheticResult result = generate_dataset(*config.synthetic);
  for (const std::string& path :
       {config.stations_file, config.forecasts_file, config.observations_file,
        config.ground_truth_file}) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty())
      fs::create_directories(parent);
  }
  write_station_csv(result.dataset, config.stations_file);
  write_forecast_csv(result.dataset, config.forecasts_file);
  write_observation_csv(result.dataset, config.observations_file);
  if (!config.ground_truth_file.empty())
    write_ground_truth_csv(result, config.ground_truth_file);
}

namespace {

constexpr const char* kRoles[2] = {"observed", "unobserved"};

const std::vector<std::string>& metric_order() {
  static const std::vector<std::string> order = {
      "crps",     "crpss_vs_raw", "crpss_vs_regional", "coverage",
      "avg_width", "mae_median",  "rmse_mean"};
  return order;
}

struct Engine {
  const RunConfig& config;
  Stage stage;
  Dataset dataset;
  std::vector<std::string> observed_ids;
  std::vector<std::string> unobserved_ids;
  PipelineResult result;

  // score tables per (model, lead, role 0/1)
  std::map<std::pair<ModelId, int>, std::array<ScoreTable, 2>> tables;

  Engine(const RunConfig& cfg, Stage st)
      : config(cfg), stage(st),
        dataset(load_dataset(cfg.forecasts_file, cfg.observations_file,
                             cfg.stations_file)) {
    observed_ids = dataset.station_ids(StationRole::Observed);
    unobserved_ids = dataset.station_ids(StationRole::Unobserved);
    if (observed_ids.empty())
      throw std::runtime_error("dataset has no observed stations");
    if (!config.validation)
      throw std::runtime_error("config needs validation_start/validation_end");
    const auto span = dataset.forecast_date_span();
    if (!span)
      throw std::runtime_error("dataset has no forecasts");
    if (config.validation->first - std::chrono::days{config.window_days} <
        span->first)
      throw std::runtime_error(
          "validation range must start at least window_days after the data "
          "start");
    if (config.validation->empty())
      throw std::runtime_error("validation range is empty");
  }

  bool has_model(ModelId id) const {
    return std::find(config.models.begin(), config.models.end(), id) !=
           config.models.end();
  }

  // Canonical processing order with raw always present as reference.
  std::vector<ModelId> active_models() const {
    std::vector<ModelId> ids = {ModelId::Raw};
    for (ModelId id : {ModelId::Regional, ModelId::Local, ModelId::SemilocalOQ,
                       ModelId::SemilocalFQ, ModelId::SemilocalFF})
      if (has_model(id))
        ids.push_back(id);
    return ids;
  }

  void add_params_row(Date date, int lead, const std::string& group,
                      const EmosFit& fit) {
    result.params_rows.push_back(params_csv_row(date, lead, group, fit));
  }

  void add_cluster_row(Date date, int lead, const std::string& station,
                       const std::string& cluster, double distance) {
    const Station* s = dataset.find_station(station);
    const char* role =
        s && s->role == StationRole::Unobserved ? "unobserved" : "observed";
    result.cluster_rows.push_back(
        format_date(date) + ',' + std::to_string(lead) + ',' + station + ',' +
        cluster + ',' + role + ',' + format_double(distance));
  }

  void score_parametric(ModelId model, int lead, Date date,
                        const std::map<std::string, EmosParams>& params) {
    if (stage != Stage::Verify)
      return;
    auto& pair = tables[{model, lead}];
    const auto never = []() -> double {
      throw std::logic_error("tie randomization requested for a TN case");
    };
    for (const auto& [station, p] : params) {
      const EnsembleForecast* f = dataset.find_forecast(station, date, lead);
      const Observation* o = dataset.find_observation(station, date);
      if (!f || !o)
        continue;
      ForecastCase fc{station, date, lead, link(p, *f), o->wind_speed};
      const Station* st = dataset.find_station(station);
      const int role = st->role == StationRole::Unobserved ? 1 : 0;
      pair[std::size_t(role)].rows.push_back(
          score_case(fc, config.alpha, never));
    }
  }

  void run_raw(int lead, Date date, Rng& tie_rng) {
    if (stage != Stage::Verify)
      return;
    auto& pair = tables[{ModelId::Raw, lead}];
    const auto draw = [&tie_rng]() { return tie_rng.uniform01(); };
    for (int role = 0; role < 2; ++role) {
      for (const std::string& station :
           role == 0 ? observed_ids : unobserved_ids) {
        const EnsembleForecast* f = dataset.find_forecast(station, date, lead);
        const Observation* o = dataset.find_observation(station, date);
        if (!f || !o)
          continue;
        RawEnsemble members;
        members.reserve(2 + kEnsembleMembers);
        members.push_back(f->hres);
        members.push_back(f->ctrl);
        members.insert(members.end(), f->members.begin(), f->members.end());
        ForecastCase fc{station, date, lead, std::move(members),
                        o->wind_speed};
        pair[std::size_t(role)].rows.push_back(
            score_case(fc, config.alpha, draw));
      }
    }
  }

  void run_regional(int lead, Date date,
                    std::map<std::string, EmosParams>& warm) {
    std::map<std::string, std::string> grouping;
    for (const std::string& s : observed_ids)
      grouping.emplace(s, "regional");
    std::map<std::string, EmosParams> inits;
    if (const auto it = warm.find("regional"); it != warm.end())
      inits.emplace("regional", it->second);
    GroupFitResult fits = fit_group_models(dataset, grouping, date, lead,
                                           config.window_days,
                                           config.optimizer, inits);
    if (fits.fits.empty())
      throw std::runtime_error(fits.failures.begin()->second);
    const EmosFit& fit = fits.fits.at("regional");
    warm["regional"] = fit.params;
    add_params_row(date, lead, "regional", fit);

    std::map<std::string, EmosParams> params;
    for (const std::string& s : observed_ids)
      params.emplace(s, fit.params);
    for (const std::string& s : unobserved_ids)
      params.emplace(s, fit.params);
    score_parametric(ModelId::Regional, lead, date, params);
  }

  void run_local(int lead, Date date, std::map<std::string, EmosParams>& warm) {
    std::map<std::string, std::string> grouping;
    for (const std::string& s : observed_ids)
      grouping.emplace(s, s);
    std::map<std::string, EmosParams> inits;
    for (const std::string& s : observed_ids)
      if (const auto it = warm.find("local/" + s); it != warm.end())
        inits.emplace(s, it->second);
    GroupFitResult fits = fit_group_models(dataset, grouping, date, lead,
                                           config.window_days,
                                           config.optimizer, inits);
    for (const auto& [station, reason] : fits.failures)
      std::cerr << "local fit failed " << format_date(date) << " lead " << lead
                << " station " << station << ": " << reason << '\n';

    std::map<std::string, EmosParams> params;
    for (const auto& [station, fit] : fits.fits) {
      warm["local/" + station] = fit.params;
      add_params_row(date, lead, "local/" + station, fit);
      params.emplace(station, fit.params);
    }

    // Interpolation to unobserved stations: the observed station with
    // the nearest forecasts-as-features vector donates its parameters.
    if (stage != Stage::Fit) {
      const DateRange window{date - std::chrono::days{config.window_days},
                             date - std::chrono::days{1}};
      std::vector<FeatureVector> donors;
      for (const std::string& s : observed_ids) {
        if (!fits.fits.count(s))
          continue;
        try {
          donors.push_back(fcst_raw_features(dataset, s, window, lead));
        } catch (const InsufficientData&) {
        }
      }
      if (!donors.empty()) {
        std::vector<std::vector<double>> donor_points;
        donor_points.reserve(donors.size());
        for (const FeatureVector& f : donors)
          donor_points.push_back(f.values);
        for (const std::string& s : unobserved_ids) {
          try {
            const FeatureVector f = fcst_raw_features(dataset, s, window, lead);
            const int slot = assign_to_cluster(f.values, donor_points);
            const std::string& donor = donors[std::size_t(slot)].station_id;
            params.emplace(s, fits.fits.at(donor).params);
            double d2 = 0.0;
            for (std::size_t i = 0; i < f.values.size(); ++i) {
              const double d = f.values[i] - donor_points[std::size_t(slot)][i];
              d2 += d * d;
            }
            add_cluster_row(date, lead, s, "local/" + donor, std::sqrt(d2));
          } catch (const InsufficientData& e) {
            std::cerr << "local interpolation skipped station " << s << ": "
                      << e.what() << '\n';
          }
        }
      }
    }
    score_parametric(ModelId::Local, lead, date, params);
  }

  void run_semilocal(ModelId model, int lead, Date date,
                     std::map<std::string, EmosParams>& warm) {
    InterpolateOptions options;
    options.cluster_kind = model == ModelId::SemilocalOQ
                               ? FeatureKind::ObsQuantile
                               : model == ModelId::SemilocalFQ
                                     ? FeatureKind::FcstQuantile
                                     : FeatureKind::FcstRaw;
    options.assignment_kind = config.assignment_features;
    options.k = config.clusters;
    options.n_obs_quantile = config.n_obs_quantile;
    options.n_fcst_quantile = config.n_fcst_quantile;
    options.zscore = config.zscore_features;

    const std::string prefix = std::string(model_name(model)) + "/";
    std::map<std::string, EmosParams> inits;
    for (int c = 0; c < options.k; ++c)
      if (const auto it = warm.find(prefix + std::to_string(c));
          it != warm.end())
        inits.emplace(std::to_string(c), it->second);

    const std::uint64_t kmeans_seed =
        mix_seed(config.seed, 0x4B00u + std::uint64_t(lead) * 8 +
                                  std::uint64_t(model));
    InterpolationResult interp = interpolate_models(
        dataset, observed_ids,
        stage == Stage::Fit ? std::vector<std::string>{} : unobserved_ids,
        options, date, lead, config.window_days, config.optimizer, kmeans_seed,
        inits);

    for (const auto& [cluster, fit] : interp.cluster_fits) {
      warm[prefix + cluster] = fit.params;
      add_params_row(date, lead, prefix + cluster, fit);
    }
    for (const auto& [cluster, reason] : interp.cluster_failures)
      std::cerr << model_name(model) << " cluster " << cluster << " unfitted "
                << format_date(date) << " lead " << lead << ": " << reason
                << '\n';
    for (const auto& [station, assignment] : interp.assignments)
      add_cluster_row(date, lead, station,
                      prefix + std::to_string(assignment.cluster),
                      assignment.distance_to_mean);
    score_parametric(model, lead, date, interp.station_params);
  }

  void run_lead(int lead) {
    std::map<std::string, EmosParams> warm;
    Rng tie_rng(mix_seed(config.seed, 0x7A3000u + std::uint64_t(lead)));
    for (Date date = config.validation->first; date <= config.validation->last;
         date += std::chrono::days{1}) {
      for (ModelId model : active_models()) {
        try {
          switch (model) {
          case ModelId::Raw:
            run_raw(lead, date, tie_rng);
            break;
          case ModelId::Regional:
            run_regional(lead, date, warm);
            break;
          case ModelId::Local:
            run_local(lead, date, warm);
            break;
          default:
            run_semilocal(model, lead, date, warm);
          }
        } catch (const std::exception& e) {
          std::cerr << "skipping " << model_name(model) << ' '
                    << format_date(date) << " lead " << lead << ": "
                    << e.what() << '\n';
        }
      }
    }
  }

  std::uint64_t metric_seed(ModelId model, int lead, int role,
                            int metric) const {
    return mix_seed(config.seed,
                    (((std::uint64_t(model) * 16 + std::uint64_t(lead)) * 2 +
                      std::uint64_t(role)) *
                         16 +
                     std::uint64_t(metric)) +
                        0xA660000u);
  }

  BootstrapInterval daily_mean_ci(const ScoreTable& table,
                                  const std::function<double(const CaseScore&)>& field,
                                  std::uint64_t seed) const {
    const auto daily = table.daily_means(field);
    std::vector<double> series;
    series.reserve(daily.size());
    for (const auto& [date, value] : daily)
      series.push_back(value);
    if (series.size() < 2)
      return {series.empty() ? 0.0 : series.front(),
              series.empty() ? 0.0 : series.front()};
    const double block = config.mean_block_length > 0.0
                             ? config.mean_block_length
                             : default_block_length(series.size());
    return stationary_bootstrap_ci(series, config.bootstrap_samples,
                                   config.bootstrap_level, block, seed);
  }

  // Joint resampling of the per-day (score, reference) means over the
  // common dates; the skill score is recomputed per resample.
  MetricValue skill_metric(const ScoreTable& table, const ScoreTable& ref,
                           std::uint64_t seed) const {
    const auto field = [](const CaseScore& c) { return c.crps; };
    const auto daily = table.daily_means(field);
    const auto ref_daily = ref.daily_means(field);
    std::map<Date, double> ref_by_date(ref_daily.begin(), ref_daily.end());
    std::vector<double> a, b;
    for (const auto& [date, value] : daily) {
      const auto it = ref_by_date.find(date);
      if (it == ref_by_date.end())
        continue;
      a.push_back(value);
      b.push_back(it->second);
    }
    if (a.empty())
      throw std::runtime_error("no common dates with the reference model");
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      mean_a += a[i];
      mean_b += b[i];
    }
    mean_a /= double(a.size());
    mean_b /= double(b.size());

    MetricValue value;
    value.value = crpss(mean_a, mean_b);
    if (a.size() < 2) {
      value.ci_low = value.ci_high = value.value;
      return value;
    }
    const double block = config.mean_block_length > 0.0
                             ? config.mean_block_length
                             : default_block_length(a.size());
    const auto stat = [&a, &b](const std::vector<std::size_t>& idx) {
      double sa = 0.0, sb = 0.0;
      for (std::size_t i : idx) {
        sa += a[i];
        sb += b[i];
      }
      return 1.0 - sa / sb;
    };
    const BootstrapInterval ci = stationary_bootstrap_ci_stat(
        a.size(), config.bootstrap_samples, config.bootstrap_level, block,
        seed, stat);
    value.ci_low = ci.lower;
    value.ci_high = ci.upper;
    return value;
  }

  void put_metric(ModelId model, int lead, int role, const std::string& metric,
                  const MetricValue& value) {
    result.metrics.emplace(
        MetricKey{model_name(model), lead, kRoles[role], metric}, value);
  }

  void aggregate() {
    for (int lead : config.lead_times) {
      for (ModelId model : active_models()) {
        const auto it = tables.find({model, lead});
        if (it == tables.end())
          continue;
        for (int role = 0; role < 2; ++role) {
          const ScoreTable& table = it->second[std::size_t(role)];
          if (table.rows.empty())
            continue;

          const auto case_mean = [&table](auto field) {
            double s = 0.0;
            for (const CaseScore& row : table.rows)
              s += field(row);
            return s / double(table.rows.size());
          };

          MetricValue crps_value;
          crps_value.value =
              case_mean([](const CaseScore& c) { return c.crps; });
          auto ci = daily_mean_ci(table,
                                  [](const CaseScore& c) { return c.crps; },
                                  metric_seed(model, lead, role, 0));
          crps_value.ci_low = ci.lower;
          crps_value.ci_high = ci.upper;
          put_metric(model, lead, role, "crps", crps_value);

          if (model != ModelId::Raw) {
            const auto raw_it = tables.find({ModelId::Raw, lead});
            if (raw_it != tables.end() &&
                !raw_it->second[std::size_t(role)].rows.empty())
              put_metric(model, lead, role, "crpss_vs_raw",
                         skill_metric(table, raw_it->second[std::size_t(role)],
                                      metric_seed(model, lead, role, 1)));
          }
          if (model != ModelId::Raw && model != ModelId::Regional &&
              has_model(ModelId::Regional)) {
            const auto reg_it = tables.find({ModelId::Regional, lead});
            if (reg_it != tables.end() &&
                !reg_it->second[std::size_t(role)].rows.empty())
              put_metric(model, lead, role, "crpss_vs_regional",
                         skill_metric(table, reg_it->second[std::size_t(role)],
                                      metric_seed(model, lead, role, 2)));
          }

          MetricValue coverage;
          coverage.value = case_mean(
              [](const CaseScore& c) { return c.interval_hit ? 1.0 : 0.0; });
          ci = daily_mean_ci(
              table,
              [](const CaseScore& c) { return c.interval_hit ? 1.0 : 0.0; },
              metric_seed(model, lead, role, 3));
          coverage.ci_low = ci.lower;
          coverage.ci_high = ci.upper;
          put_metric(model, lead, role, "coverage", coverage);

          MetricValue width;
          width.value =
              case_mean([](const CaseScore& c) { return c.interval_width; });
          ci = daily_mean_ci(table,
                             [](const CaseScore& c) { return c.interval_width; },
                             metric_seed(model, lead, role, 4));
          width.ci_low = ci.lower;
          width.ci_high = ci.upper;
          put_metric(model, lead, role, "avg_width", width);

          MetricValue mae;
          mae.value =
              case_mean([](const CaseScore& c) { return c.abs_err_median; });
          ci = daily_mean_ci(table,
                             [](const CaseScore& c) { return c.abs_err_median; },
                             metric_seed(model, lead, role, 5));
          mae.ci_low = ci.lower;
          mae.ci_high = ci.upper;
          put_metric(model, lead, role, "mae_median", mae);

          MetricValue rmse;
          rmse.value = std::sqrt(
              case_mean([](const CaseScore& c) { return c.sq_err_mean; }));
          ci = daily_mean_ci(table,
                             [](const CaseScore& c) { return c.sq_err_mean; },
                             metric_seed(model, lead, role, 6));
          rmse.ci_low = std::sqrt(std::max(0.0, ci.lower));
          rmse.ci_high = std::sqrt(std::max(0.0, ci.upper));
          put_metric(model, lead, role, "rmse_mean", rmse);
        }
      }
    }
  }

  void collect_score_rows() {
    for (int role = 0; role < 2; ++role) {
      auto& rows = result.score_rows[kRoles[role]];
      for (int lead : config.lead_times) {
        for (ModelId model : active_models()) {
          const auto it = tables.find({model, lead});
          if (it == tables.end())
            continue;
          for (const CaseScore& c : it->second[std::size_t(role)].rows) {
            rows.push_back(std::string(model_name(model)) + ',' +
                           std::to_string(lead) + ',' + c.station_id + ',' +
                           format_date(c.valid_date) + ',' +
                           format_double(c.crps) + ',' +
                           format_double(c.pit_or_rank) + ',' +
                           (c.interval_hit ? "1" : "0") + ',' +
                           format_double(c.interval_width) + ',' +
                           format_double(c.abs_err_median) + ',' +
                           format_double(c.sq_err_mean));
          }
        }
      }
    }
  }

  void run() {
    for (int lead : config.lead_times)
      run_lead(lead);
    if (stage == Stage::Verify) {
      aggregate();
      collect_score_rows();
    }
  }
};

void write_lines(const fs::path& path, const std::string& header,
                 const std::vector<std::string>& rows) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << header << '\n';
  for (const std::string& row : rows)
    out << row << '\n';
}

} // namespace

PipelineResult run_pipeline(const RunConfig& config, Stage stage) {
  Engine engine(config, stage);
  engine.run();
  PipelineResult& result = engine.result;

  const fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir);
  write_lines(out_dir / "params.csv", params_csv_header(), result.params_rows);
  if (stage != Stage::Fit)
    write_lines(out_dir / "clusters.csv", clusters_csv_header(),
                result.cluster_rows);

  if (stage == Stage::Verify) {
    for (int role = 0; role < 2; ++role) {
      const fs::path dir = out_dir / kRoles[role];
      fs::create_directories(dir);

      write_lines(dir / "scores.csv",
                  "model,lead_time,station_id,date,crps,pit_or_rank,"
                  "interval_hit,interval_width,abs_err_median,sq_err_mean",
                  result.score_rows[kRoles[role]]);

      std::vector<std::string> agg_rows;
      for (int lead : config.lead_times)
        for (ModelId model : engine.active_models())
          for (const std::string& metric : metric_order()) {
            const auto it = result.metrics.find(
                MetricKey{model_name(model), lead, kRoles[role], metric});
            if (it == result.metrics.end())
              continue;
            agg_rows.push_back(std::string(model_name(model)) + ',' +
                               std::to_string(lead) + ',' + metric + ',' +
                               format_double(it->second.value) + ',' +
                               format_double(it->second.ci_low) + ',' +
                               format_double(it->second.ci_high));
          }
      write_lines(dir / "scores_agg.csv", metrics_csv_header(), agg_rows);

      std::vector<std::string> pit_rows;
      std::vector<std::string> rank_rows;
      for (int lead : config.lead_times) {
        for (ModelId model : engine.active_models()) {
          const auto it = engine.tables.find({model, lead});
          if (it == engine.tables.end())
            continue;
          const ScoreTable& table = it->second[std::size_t(role)];
          if (table.rows.empty())
            continue;
          std::vector<double> values;
          values.reserve(table.rows.size());
          for (const CaseScore& c : table.rows)
            values.push_back(c.pit_or_rank);
          if (model == ModelId::Raw) {
            const auto bins = rank_histogram_values(values);
            for (std::size_t b = 0; b < bins.size(); ++b)
              rank_rows.push_back(std::string(model_name(model)) + ',' +
                                  std::to_string(lead) + ',' +
                                  std::to_string(b + 1) + ',' +
                                  std::to_string(bins[b]));
          } else {
            const auto bins = pit_histogram_values(values, config.pit_bins);
            for (std::size_t b = 0; b < bins.size(); ++b)
              pit_rows.push_back(std::string(model_name(model)) + ',' +
                                 std::to_string(lead) + ',' +
                                 std::to_string(b + 1) + ',' +
                                 std::to_string(bins[b]));
          }
        }
      }
      write_lines(dir / "pit_hist.csv", hist_csv_header(), pit_rows);
      write_lines(dir / "rank_hist.csv", hist_csv_header(), rank_rows);
    }
  }
  return result;
}

} // namespace emoscast
