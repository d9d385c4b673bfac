#ifndef EMOSCAST_STATS_HPP
#define EMOSCAST_STATS_HPP

// Small sample-statistics helpers shared by clustering and verification.

#include <span>
#include <vector>

namespace emoscast {

double mean(std::span<const double> values);

// Sample variance with divisor n-1; zero for n < 2.
double sample_variance(std::span<const double> values);

// Empirical quantile with linear interpolation between adjacent order
// statistics (the continuous convention with p*(n-1) fractional index).
// `sorted` must be ascending and nonempty; p is clamped to [0, 1].
double empirical_quantile_sorted(std::span<const double> sorted, double p);

// Convenience: sorts a copy, then evaluates every level.
std::vector<double> empirical_quantiles(std::vector<double> values,
                                        std::span<const double> levels);

// Equidistant levels j/(count+1), j = 1..count.
std::vector<double> equidistant_levels(int count);

} // namespace emoscast

#endif
