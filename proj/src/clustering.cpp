#include "emoscast/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "emoscast/rng.hpp"
#include "emoscast/stats.hpp"

namespace emoscast {

namespace {

double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void check_finite(const FeatureVector& f) {
  for (double v : f.values)
    if (!std::isfinite(v))
      throw InsufficientData("station " + f.station_id +
                             ": non-finite feature component");
}

std::vector<double> quantile_block(std::vector<double> sample, int levels) {
  return empirical_quantiles(std::move(sample), equidistant_levels(levels));
}

void append(std::vector<double>& out, const std::vector<double>& block) {
  out.insert(out.end(), block.begin(), block.end());
}

} // namespace

const char* feature_kind_name(FeatureKind kind) {
  switch (kind) {
  case FeatureKind::ObsQuantile:
    return "obs_quantile";
  case FeatureKind::FcstQuantile:
    return "fcst_quantile";
  case FeatureKind::FcstRaw:
    return "fcst_raw";
  }
  return "unknown";
}

FeatureVector obs_quantile_features(const Dataset& dataset,
                                    const std::string& station_id,
                                    const DateRange& window, int lead_time,
                                    int n_features) {
  if (n_features < 2)
    throw std::invalid_argument("obs_quantile_features: N must be >= 2");
  const int n1 = n_features / 2;
  const int n2 = n_features - n1;
  const auto cases = complete_cases(dataset, {station_id}, window, lead_time);
  if (std::ssize(cases) < n1 + 1)
    throw InsufficientData("station " + station_id + ": " +
                           std::to_string(cases.size()) +
                           " complete cases in window, need " +
                           std::to_string(n1 + 1));
  std::vector<double> climatology, errors;
  climatology.reserve(cases.size());
  errors.reserve(cases.size());
  for (const auto& [forecast, obs] : cases) {
    climatology.push_back(obs->wind_speed);
    errors.push_back(ensemble_stats(*forecast).mean - obs->wind_speed);
  }
  FeatureVector f{station_id, FeatureKind::ObsQuantile, {}};
  f.values.reserve(std::size_t(n_features));
  append(f.values, quantile_block(std::move(climatology), n1));
  append(f.values, quantile_block(std::move(errors), n2));
  check_finite(f);
  return f;
}

FeatureVector fcst_quantile_features(const Dataset& dataset,
                                     const std::string& station_id,
                                     const DateRange& window, int lead_time,
                                     int n_features) {
  if (n_features < 4)
    throw std::invalid_argument("fcst_quantile_features: N must be >= 4");
  const int quarter = n_features / 4;
  const int last = n_features - 3 * quarter;
  std::vector<double> hres, ctrl, ens_mean, ens_sd;
  for (Date d = window.first; d <= window.last; d += std::chrono::days{1}) {
    const EnsembleForecast* f = dataset.find_forecast(station_id, d, lead_time);
    if (!f)
      continue;
    const EnsembleStats stats = ensemble_stats(*f);
    hres.push_back(f->hres);
    ctrl.push_back(f->ctrl);
    ens_mean.push_back(stats.mean);
    ens_sd.push_back(std::sqrt(stats.variance));
  }
  if (std::ssize(hres) < last + 1)
    throw InsufficientData("station " + station_id + ": " +
                           std::to_string(hres.size()) +
                           " forecast days in window, need " +
                           std::to_string(last + 1));
  FeatureVector f{station_id, FeatureKind::FcstQuantile, {}};
  f.values.reserve(std::size_t(n_features));
  append(f.values, quantile_block(std::move(hres), quarter));
  append(f.values, quantile_block(std::move(ctrl), quarter));
  append(f.values, quantile_block(std::move(ens_mean), quarter));
  append(f.values, quantile_block(std::move(ens_sd), last));
  check_finite(f);
  return f;
}

FeatureVector fcst_raw_features(const Dataset& dataset,
                                const std::string& station_id,
                                const DateRange& window, int lead_time) {
  std::vector<double> hres, ctrl, ens_mean, ens_sd;
  for (Date d = window.first; d <= window.last; d += std::chrono::days{1}) {
    const EnsembleForecast* f = dataset.find_forecast(station_id, d, lead_time);
    if (!f)
      throw InsufficientData("station " + station_id +
                             ": no forecast on " + format_date(d) +
                             " (raw features need the full window)");
    const EnsembleStats stats = ensemble_stats(*f);
    hres.push_back(f->hres);
    ctrl.push_back(f->ctrl);
    ens_mean.push_back(stats.mean);
    ens_sd.push_back(std::sqrt(stats.variance));
  }
  FeatureVector f{station_id, FeatureKind::FcstRaw, {}};
  f.values.reserve(4 * hres.size());
  append(f.values, hres);
  append(f.values, ctrl);
  append(f.values, ens_mean);
  append(f.values, ens_sd);
  check_finite(f);
  return f;
}

FeatureVector station_features(const Dataset& dataset,
                               const std::string& station_id,
                               const DateRange& window, int lead_time,
                               FeatureKind kind, int n_obs_quantile,
                               int n_fcst_quantile) {
  switch (kind) {
  case FeatureKind::ObsQuantile:
    return obs_quantile_features(dataset, station_id, window, lead_time,
                                 n_obs_quantile);
  case FeatureKind::FcstQuantile:
    return fcst_quantile_features(dataset, station_id, window, lead_time,
                                  n_fcst_quantile);
  case FeatureKind::FcstRaw:
    return fcst_raw_features(dataset, station_id, window, lead_time);
  }
  throw std::invalid_argument("unknown feature kind");
}

int assign_to_cluster(const std::vector<double>& feature,
                      const std::vector<std::vector<double>>& means) {
  if (means.empty())
    throw std::invalid_argument("assign_to_cluster: no cluster means");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < means.size(); ++c) {
    if (means[c].size() != feature.size())
      throw DimensionMismatch("assign_to_cluster: feature dim " +
                              std::to_string(feature.size()) +
                              " vs mean dim " +
                              std::to_string(means[c].size()));
    const double d = sq_distance(feature, means[c]);
    if (d < best_d) {
      best_d = d;
      best = int(c);
    }
  }
  return best;
}

namespace {

struct LloydRun {
  std::vector<int> assignment;
  std::vector<std::vector<double>> means;
  double inertia = 0.0;
  std::vector<double> trace;
};

std::vector<std::vector<double>>
centroids(const std::vector<const FeatureVector*>& points,
          const std::vector<int>& assignment, int k, std::size_t dim) {
  std::vector<std::vector<double>> means(std::size_t(k),
                                         std::vector<double>(dim, 0.0));
  std::vector<int> counts(std::size_t(k), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    ++counts[std::size_t(assignment[i])];
    const auto& v = points[i]->values;
    auto& m = means[std::size_t(assignment[i])];
    for (std::size_t j = 0; j < dim; ++j)
      m[j] += v[j];
  }
  for (int c = 0; c < k; ++c)
    if (counts[std::size_t(c)] > 0)
      for (double& x : means[std::size_t(c)])
        x /= double(counts[std::size_t(c)]);
  return means;
}

double total_inertia(const std::vector<const FeatureVector*>& points,
                     const std::vector<int>& assignment,
                     const std::vector<std::vector<double>>& means) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    s += sq_distance(points[i]->values, means[std::size_t(assignment[i])]);
  return s;
}

double nearest_sq_distance(const std::vector<double>& point,
                           const std::vector<std::vector<double>>& means) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : means)
    best = std::min(best, sq_distance(point, m));
  return best;
}

LloydRun lloyd_once(const std::vector<const FeatureVector*>& points, int k,
                    std::uint64_t seed, int max_iter) {
  const std::size_t n = points.size();
  const std::size_t dim = points.front()->values.size();
  Rng rng(seed);

  // Distance-squared-weighted seeding.
  std::vector<std::vector<double>> means;
  std::vector<bool> chosen(n, false);
  {
    const std::size_t first = rng.uniform_int(n);
    means.push_back(points[first]->values);
    chosen[first] = true;
    std::vector<double> d2(n);
    while (std::ssize(means) < k) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d2[i] = chosen[i] ? 0.0
                          : nearest_sq_distance(points[i]->values, means);
        total += d2[i];
      }
      std::size_t pick = n;
      if (total > 0.0) {
        double target = rng.uniform01() * total;
        for (std::size_t i = 0; i < n; ++i) {
          target -= d2[i];
          if (target <= 0.0 && !chosen[i]) {
            pick = i;
            break;
          }
        }
      }
      if (pick == n) {
        // all remaining points coincide with a center; take the first free
        for (std::size_t i = 0; i < n; ++i)
          if (!chosen[i]) {
            pick = i;
            break;
          }
      }
      chosen[pick] = true;
      means.push_back(points[pick]->values);
    }
  }

  LloydRun run;
  run.assignment.assign(n, 0);
  int repairs_left = k + 2;
  for (int iter = 0; iter < max_iter; ++iter) {
    std::vector<int> next(n);
    for (std::size_t i = 0; i < n; ++i)
      next[i] = assign_to_cluster(points[i]->values, means);

    // Repair emptied clusters: hand them the farthest member of the
    // largest cluster.
    std::vector<int> counts(std::size_t(k), 0);
    for (int a : next)
      ++counts[std::size_t(a)];
    for (int c = 0; c < k && repairs_left > 0; ++c) {
      if (counts[std::size_t(c)] > 0)
        continue;
      const int donor = int(std::max_element(counts.begin(), counts.end()) -
                            counts.begin());
      double worst = -1.0;
      std::size_t moved = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (next[i] != donor)
          continue;
        const double d =
            sq_distance(points[i]->values, means[std::size_t(donor)]);
        if (d > worst) {
          worst = d;
          moved = i;
        }
      }
      if (moved == n)
        break;
      next[moved] = c;
      --counts[std::size_t(donor)];
      ++counts[std::size_t(c)];
      --repairs_left;
    }

    means = centroids(points, next, k, dim);
    const double inertia = total_inertia(points, next, means);
    run.trace.push_back(inertia);
    const bool stable = next == run.assignment && iter > 0;
    run.assignment = std::move(next);
    run.inertia = inertia;
    if (stable)
      break;
  }
  run.means = std::move(means);
  return run;
}

} // namespace

// Exhaustive assignment search for toy-sized inputs, where Lloyd can
// sit in a local optimum no matter how it is seeded.
LloydRun exact_kmeans(const std::vector<const FeatureVector*>& points, int k,
                      long labelings) {
  const std::size_t n = points.size();
  const std::size_t dim = points.front()->values.size();
  LloydRun best;
  best.inertia = std::numeric_limits<double>::infinity();
  std::vector<int> assignment(n, 0);
  for (long code = 0; code < labelings; ++code) {
    long c = code;
    std::vector<bool> used(std::size_t(k), false);
    for (std::size_t i = 0; i < n; ++i) {
      assignment[i] = int(c % k);
      used[std::size_t(assignment[i])] = true;
      c /= k;
    }
    if (std::find(used.begin(), used.end(), false) != used.end())
      continue;
    const auto means = centroids(points, assignment, k, dim);
    const double inertia = total_inertia(points, assignment, means);
    if (inertia < best.inertia) {
      best.assignment = assignment;
      best.means = means;
      best.inertia = inertia;
    }
  }
  best.trace = {best.inertia};
  return best;
}

Clustering kmeans(const std::vector<FeatureVector>& features, int k,
                  std::uint64_t seed, int max_iter) {
  if (features.empty())
    throw std::invalid_argument("kmeans: no feature vectors");
  if (k < 1 || std::size_t(k) > features.size())
    throw std::invalid_argument("kmeans: k must lie in [1, #stations]");
  if (max_iter < 1)
    throw std::invalid_argument("kmeans: max_iter must be >= 1");
  const FeatureKind kind = features.front().kind;
  const std::size_t dim = features.front().values.size();
  std::vector<const FeatureVector*> points;
  points.reserve(features.size());
  for (const FeatureVector& f : features) {
    if (f.kind != kind || f.values.size() != dim)
      throw DimensionMismatch("kmeans: mixed feature kinds or dimensions");
    points.push_back(&f);
  }

  LloydRun best;
  double labelings = std::pow(double(k), double(points.size()));
  if (labelings <= 4096.0) {
    best = exact_kmeans(points, k, long(labelings));
  } else {
    constexpr int kRestarts = 8;
    bool have_best = false;
    for (int r = 0; r < kRestarts; ++r) {
      LloydRun run = lloyd_once(points, k, mix_seed(seed, std::uint64_t(r)),
                                max_iter);
      if (!have_best || run.inertia < best.inertia) {
        best = std::move(run);
        have_best = true;
      }
    }
  }

  Clustering result;
  result.k = k;
  result.feature_kind = kind;
  result.means = std::move(best.means);
  result.inertia = best.inertia;
  result.inertia_trace = std::move(best.trace);
  for (std::size_t i = 0; i < points.size(); ++i)
    result.assignments.emplace(points[i]->station_id, best.assignment[i]);
  return result;
}

namespace {

struct ColumnScaler {
  std::vector<double> center;
  std::vector<double> scale;

  static ColumnScaler fit(const std::vector<FeatureVector>& features) {
    const std::size_t dim = features.front().values.size();
    ColumnScaler s;
    s.center.assign(dim, 0.0);
    s.scale.assign(dim, 1.0);
    for (std::size_t j = 0; j < dim; ++j) {
      std::vector<double> column;
      column.reserve(features.size());
      for (const FeatureVector& f : features)
        column.push_back(f.values[j]);
      s.center[j] = mean(column);
      const double sd = std::sqrt(sample_variance(column));
      if (sd > 0.0)
        s.scale[j] = sd;
    }
    return s;
  }

  void apply(FeatureVector& f) const {
    for (std::size_t j = 0; j < f.values.size(); ++j)
      f.values[j] = (f.values[j] - center[j]) / scale[j];
  }
};

} // namespace

InterpolationResult interpolate_with_clustering(
    const Dataset& dataset, const Clustering& clustering,
    const std::vector<std::string>& unobserved_ids,
    const InterpolateOptions& options, Date target_date, int lead_time, int n,
    const OptimizerConfig& optimizer,
    const std::map<std::string, EmosParams>& warm_inits) {
  if (options.assignment_kind == FeatureKind::ObsQuantile)
    throw std::invalid_argument(
        "interpolation assignment features must be forecast-based");
  const DateRange window{target_date - std::chrono::days{n},
                         target_date - std::chrono::days{1}};

  InterpolationResult result;
  result.clustering = clustering;

  // Per-cluster EMOS fits over the member stations.
  std::map<std::string, std::string> grouping;
  for (const auto& [station, cluster] : clustering.assignments)
    grouping.emplace(station, std::to_string(cluster));
  GroupFitResult fits = fit_group_models(dataset, grouping, target_date,
                                         lead_time, n, optimizer, warm_inits);
  result.cluster_fits = std::move(fits.fits);
  result.cluster_failures = std::move(fits.failures);

  // Step 2: assignment-kind features for observed stations, averaged
  // per cluster.  Stations that cannot be featurized drop out of the
  // mean; the cluster itself stays fitted.
  std::vector<FeatureVector> observed_features;
  std::vector<int> observed_clusters;
  for (const auto& [station, cluster] : clustering.assignments) {
    try {
      observed_features.push_back(
          station_features(dataset, station, window, lead_time,
                           options.assignment_kind, options.n_obs_quantile,
                           options.n_fcst_quantile));
      observed_clusters.push_back(cluster);
    } catch (const InsufficientData&) {
      // already clustered; just unavailable for the assignment mean
    }
  }
  if (observed_features.empty())
    throw InsufficientData("no observed station has assignment features");
  ColumnScaler scaler;
  if (options.zscore) {
    scaler = ColumnScaler::fit(observed_features);
    for (FeatureVector& f : observed_features)
      scaler.apply(f);
  }
  const std::size_t dim = observed_features.front().values.size();
  std::vector<std::vector<double>> sums(std::size_t(clustering.k),
                                        std::vector<double>(dim, 0.0));
  std::vector<int> counts(std::size_t(clustering.k), 0);
  for (std::size_t i = 0; i < observed_features.size(); ++i) {
    if (observed_features[i].values.size() != dim)
      throw DimensionMismatch("assignment features differ in dimension");
    auto& sum = sums[std::size_t(observed_clusters[i])];
    for (std::size_t j = 0; j < dim; ++j)
      sum[j] += observed_features[i].values[j];
    ++counts[std::size_t(observed_clusters[i])];
  }
  std::vector<std::vector<double>> cluster_means;
  std::vector<int> cluster_of_mean;
  for (int c = 0; c < clustering.k; ++c) {
    if (counts[std::size_t(c)] == 0)
      continue;
    auto& sum = sums[std::size_t(c)];
    for (double& v : sum)
      v /= double(counts[std::size_t(c)]);
    cluster_means.push_back(std::move(sum));
    cluster_of_mean.push_back(c);
  }

  // Steps 3-4: feature and assign the unobserved stations.
  for (const std::string& station : unobserved_ids) {
    try {
      FeatureVector f =
          station_features(dataset, station, window, lead_time,
                           options.assignment_kind, options.n_obs_quantile,
                           options.n_fcst_quantile);
      if (options.zscore)
        scaler.apply(f);
      const int slot = assign_to_cluster(f.values, cluster_means);
      const int cluster = cluster_of_mean[std::size_t(slot)];
      result.assignments[station] = {
          cluster, std::sqrt(sq_distance(f.values,
                                         cluster_means[std::size_t(slot)]))};
    } catch (const InsufficientData& e) {
      result.skipped.emplace(station, e.what());
    }
  }

  // Observed stations keep their Step-1 cluster; the distance in
  // clustering space is filled by interpolate_models, which holds the
  // feature vectors the clustering actually ran on.
  for (const auto& [station, cluster] : clustering.assignments)
    result.assignments[station] = {cluster,
                                   std::numeric_limits<double>::quiet_NaN()};

  // Step 5: parameters via cluster membership.
  for (const auto& [station, assignment] : result.assignments) {
    const std::string key = std::to_string(assignment.cluster);
    const auto fit = result.cluster_fits.find(key);
    if (fit != result.cluster_fits.end())
      result.station_params.emplace(station, fit->second.params);
    else if (!result.skipped.count(station))
      result.skipped.emplace(station, "cluster " + key + " has no fit");
  }
  return result;
}

InterpolationResult interpolate_models(
    const Dataset& dataset, const std::vector<std::string>& observed_ids,
    const std::vector<std::string>& unobserved_ids,
    const InterpolateOptions& options, Date target_date, int lead_time, int n,
    const OptimizerConfig& optimizer, std::uint64_t seed,
    const std::map<std::string, EmosParams>& warm_inits) {
  if (options.k < 1)
    throw std::invalid_argument("interpolate_models: k must be >= 1");
  const DateRange window{target_date - std::chrono::days{n},
                         target_date - std::chrono::days{1}};

  std::vector<FeatureVector> features;
  std::map<std::string, std::string> skipped;
  std::vector<std::string> ids = observed_ids;
  std::sort(ids.begin(), ids.end());
  for (const std::string& station : ids) {
    try {
      features.push_back(station_features(
          dataset, station, window, lead_time, options.cluster_kind,
          options.n_obs_quantile, options.n_fcst_quantile));
    } catch (const InsufficientData& e) {
      skipped.emplace(station, e.what());
    }
  }
  if (std::ssize(features) < options.k)
    throw InsufficientData(
        "only " + std::to_string(features.size()) +
        " observed stations have features, need k = " +
        std::to_string(options.k));
  std::optional<ColumnScaler> scaler;
  if (options.zscore) {
    scaler = ColumnScaler::fit(features);
    for (FeatureVector& f : features)
      scaler->apply(f);
  }

  const Clustering clustering =
      kmeans(features, options.k, seed, options.kmeans_max_iter);
  InterpolationResult result = interpolate_with_clustering(
      dataset, clustering, unobserved_ids, options, target_date, lead_time, n,
      optimizer, warm_inits);
  for (const FeatureVector& f : features) {
    const int cluster = clustering.assignments.at(f.station_id);
    result.assignments[f.station_id] = {
        cluster,
        std::sqrt(sq_distance(f.values, clustering.means[std::size_t(cluster)]))};
  }
  for (const auto& [station, reason] : skipped)
    result.skipped.emplace(station, reason);
  return result;
}

double great_circle_km(double lat1_deg, double lon1_deg, double lat2_deg,
                       double lon2_deg) {
  constexpr double kEarthRadiusKm = 6371.0;
  constexpr double kDegToRad = M_PI / 180.0;
  const double lat1 = lat1_deg * kDegToRad;
  const double lat2 = lat2_deg * kDegToRad;
  const double dlat = (lat2_deg - lat1_deg) * kDegToRad;
  const double dlon = (lon2_deg - lon1_deg) * kDegToRad;
  const double s1 = std::sin(0.5 * dlat);
  const double s2 = std::sin(0.5 * dlon);
  const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

int assign_geographic(const Station& station, const Clustering& clustering,
                      const std::vector<Station>& stations) {
  if (clustering.assignments.empty())
    throw std::invalid_argument("assign_geographic: empty clustering");
  std::map<std::string, const Station*> by_id;
  for (const Station& s : stations)
    by_id.emplace(s.id, &s);

  std::vector<double> total(std::size_t(clustering.k), 0.0);
  std::vector<int> counts(std::size_t(clustering.k), 0);
  for (const auto& [id, cluster] : clustering.assignments) {
    const auto it = by_id.find(id);
    if (it == by_id.end())
      throw std::invalid_argument("assign_geographic: unknown station " + id);
    total[std::size_t(cluster)] +=
        great_circle_km(station.latitude, station.longitude,
                        it->second->latitude, it->second->longitude);
    ++counts[std::size_t(cluster)];
  }
  int best = -1;
  double best_mean = std::numeric_limits<double>::infinity();
  for (int c = 0; c < clustering.k; ++c) {
    if (counts[std::size_t(c)] == 0)
      continue;
    const double m = total[std::size_t(c)] / double(counts[std::size_t(c)]);
    if (m < best_mean) {
      best_mean = m;
      best = c;
    }
  }
  return best;
}

std::string clusters_csv_header() {
  return "date,lead_time,station_id,cluster_id,role,distance_to_mean";
}

} // namespace emoscast
