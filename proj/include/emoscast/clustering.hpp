#ifndef EMOSCAST_CLUSTERING_HPP
#define EMOSCAST_CLUSTERING_HPP

// Semi-local station grouping: per-station feature vectors (three
// constructions), k-means over the observed stations, and the
// interpolation that hands cluster parameters to unobserved locations:
//
//   Step 1  cluster observed stations on a chosen feature kind and fit
//           per-cluster EMOS models;
//   Step 2  rebuild forecast-based features for the observed stations
//           and average them per cluster;
//   Step 3  build the same features for unobserved stations;
//   Step 4  assign each unobserved station to the nearest cluster mean
//           (Euclidean);
//   Step 5  every station inherits its cluster's parameters.
//
// One cluster reproduces regional estimation; as many clusters as
// observed stations reproduces local estimation plus nearest-feature
// matching.  A geographic-distance assignment is provided as baseline.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "emoscast/data_model.hpp"
#include "emoscast/emos.hpp"

namespace emoscast {

enum class FeatureKind { ObsQuantile, FcstQuantile, FcstRaw };

const char* feature_kind_name(FeatureKind kind);

struct FeatureVector {
  std::string station_id;
  FeatureKind kind = FeatureKind::FcstRaw;
  std::vector<double> values; // m/s componentwise
};

class InsufficientData : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Concatenated equidistant quantiles of the station's observed-wind CDF
// (floor(N/2) levels) and of the ens-mean error CDF (the rest), from
// the complete cases in the window.
FeatureVector obs_quantile_features(const Dataset& dataset,
                                    const std::string& station_id,
                                    const DateRange& window, int lead_time,
                                    int n_features);

// Forecast-only analogue over four empirical CDFs: hres, ctrl, ensemble
// mean and ensemble standard deviation, each floor(N/4) levels with the
// remainder on the last block.
FeatureVector fcst_quantile_features(const Dataset& dataset,
                                     const std::string& station_id,
                                     const DateRange& window, int lead_time,
                                     int n_features);

// The raw 4n-dimensional concatenation of the window's hres, ctrl,
// ensemble-mean and ensemble-sd series, oldest day first.  Requires a
// forecast on every day of the window.
FeatureVector fcst_raw_features(const Dataset& dataset,
                                const std::string& station_id,
                                const DateRange& window, int lead_time);

FeatureVector station_features(const Dataset& dataset,
                               const std::string& station_id,
                               const DateRange& window, int lead_time,
                               FeatureKind kind, int n_obs_quantile,
                               int n_fcst_quantile);

struct Clustering {
  int k = 1;
  std::map<std::string, int> assignments;
  std::vector<std::vector<double>> means; // centroid of each cluster
  FeatureKind feature_kind = FeatureKind::FcstRaw;
  double inertia = 0.0;
  std::vector<double> inertia_trace; // per Lloyd iteration, nonincreasing
};

// Lloyd iterations from distance-squared-weighted seeding, best of a
// fixed set of seed-derived restarts.  Ties in assignment go to the
// lowest cluster id; an emptied cluster is repaired by splitting the
// largest cluster at its farthest member.
Clustering kmeans(const std::vector<FeatureVector>& features, int k,
                  std::uint64_t seed, int max_iter = 100);

// Index of the nearest mean by squared Euclidean distance, lowest index
// on ties.  Throws DimensionMismatch on inconsistent dimensions.
int assign_to_cluster(const std::vector<double>& feature,
                      const std::vector<std::vector<double>>& means);

struct InterpolateOptions {
  FeatureKind cluster_kind = FeatureKind::FcstRaw;
  // Step 2-4 features must be forecast-based.
  FeatureKind assignment_kind = FeatureKind::FcstRaw;
  int k = 20;
  int n_obs_quantile = 24;
  int n_fcst_quantile = 40;
  bool zscore = false; // standardize feature columns before distances
  int kmeans_max_iter = 100;
};

struct StationAssignment {
  int cluster = -1;
  double distance_to_mean = 0.0;
};

struct InterpolationResult {
  Clustering clustering; // over observed stations, Step 1
  std::map<std::string, EmosFit> cluster_fits;  // by cluster id as text
  std::map<std::string, std::string> cluster_failures;
  std::map<std::string, EmosParams> station_params; // Step 5, all stations
  std::map<std::string, StationAssignment> assignments; // incl. unobserved
  std::map<std::string, std::string> skipped; // station -> reason
};

InterpolationResult interpolate_models(
    const Dataset& dataset, const std::vector<std::string>& observed_ids,
    const std::vector<std::string>& unobserved_ids,
    const InterpolateOptions& options, Date target_date, int lead_time, int n,
    const OptimizerConfig& optimizer, std::uint64_t seed,
    const std::map<std::string, EmosParams>& warm_inits = {});

// Steps 2-5 against an existing Step-1 clustering; the station-params
// map is invariant under permutation of the clustering's labels.
InterpolationResult interpolate_with_clustering(
    const Dataset& dataset, const Clustering& clustering,
    const std::vector<std::string>& unobserved_ids,
    const InterpolateOptions& options, Date target_date, int lead_time, int n,
    const OptimizerConfig& optimizer,
    const std::map<std::string, EmosParams>& warm_inits = {});

// Great-circle distance on a sphere of radius 6371 km.
double great_circle_km(double lat1_deg, double lon1_deg, double lat2_deg,
                       double lon2_deg);

// Baseline: the cluster with the smallest mean great-circle distance
// from `station` to its member stations; lowest id on ties.
int assign_geographic(const Station& station, const Clustering& clustering,
                      const std::vector<Station>& stations);

// clusters.csv schema used by the tools:
//   date,lead_time,station_id,cluster_id,role,distance_to_mean
std::string clusters_csv_header();

} // namespace emoscast

#endif
