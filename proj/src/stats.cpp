#include "emoscast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace emoscast {

double mean(std::span<const double> values) {
  if (values.empty())
    throw std::invalid_argument("mean: empty sample");
  double s = 0.0;
  for (double v : values)
    s += v;
  return s / double(values.size());
}

double sample_variance(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2)
    return 0.0;
  const double m = mean(values);
  double s = 0.0;
  for (double v : values)
    s += (v - m) * (v - m);
  return s / double(n - 1);
}

double empirical_quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty())
    throw std::invalid_argument("empirical_quantile: empty sample");
  p = std::clamp(p, 0.0, 1.0);
  const double pos = p * double(sorted.size() - 1);
  const std::size_t lo = std::size_t(pos);
  if (lo + 1 >= sorted.size())
    return sorted.back();
  const double w = pos - double(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[lo + 1];
}

std::vector<double> empirical_quantiles(std::vector<double> values,
                                        std::span<const double> levels) {
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  out.reserve(levels.size());
  for (double p : levels)
    out.push_back(empirical_quantile_sorted(values, p));
  return out;
}

std::vector<double> equidistant_levels(int count) {
  std::vector<double> levels;
  levels.reserve(std::size_t(std::max(count, 0)));
  for (int j = 1; j <= count; ++j)
    levels.push_back(double(j) / double(count + 1));
  return levels;
}

} // namespace emoscast
