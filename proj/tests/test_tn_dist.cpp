#include <doctest.h>

#include <cmath>
#include <vector>

#include "emoscast/normal.hpp"
#include "emoscast/rng.hpp"
#include "emoscast/tn_dist.hpp"
#include "test_util.hpp"

using namespace emoscast;

namespace {

// Density-integration oracle for CDF checks: fixed-grid Simpson over
// [0, y] of the TN density written straight from its definition.
double cdf_by_integration(const TruncNormal& d, double y) {
  if (y <= 0.0)
    return 0.0;
  const double normalizer = norm_cdf(d.mu / d.sigma);
  const auto density = [&](double t) {
    return norm_pdf((t - d.mu) / d.sigma) / (d.sigma * normalizer);
  };
  const int panels = 20000;
  const double h = y / (2.0 * panels);
  double sum = density(0.0) + density(y);
  for (int i = 1; i < 2 * panels; ++i)
    sum += density(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// Bisection oracle for quantiles.
double quantile_by_bisection(const TruncNormal& d, double p) {
  double lo = 0.0, hi = std::max(d.mu, 0.0) + 20.0 * d.sigma;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (tn_cdf(d, mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("tn_cdf matches the density-integration oracle") {
  CHECK(tn_cdf({0.0, 1.0}, -0.5) == 0.0);
  CHECK(tn_cdf({0.0, 1.0}, 0.0) == 0.0);

  // frozen from the oracle: 2*Phi(1)-1 and (Phi(0)-Phi(-2))/(1-Phi(-2))
  CHECK(std::abs(tn_cdf({0.0, 1.0}, 1.0) - 0.6827) < 1e-4);
  CHECK(std::abs(tn_cdf({2.0, 1.0}, 2.0) - 0.4884) < 1e-4);
  CHECK(std::abs(tn_cdf({0.0, 1.0}, 1.0) - cdf_by_integration({0.0, 1.0}, 1.0)) <
        1e-8);
  CHECK(std::abs(tn_cdf({2.0, 1.0}, 2.0) - cdf_by_integration({2.0, 1.0}, 2.0)) <
        1e-8);

  SUBCASE("nondecreasing and onto [0, 1)") {
    for (const TruncNormal d : {TruncNormal{1.5, 0.7}, TruncNormal{-2.0, 1.3},
                                TruncNormal{-20.0, 1.0}}) {
      double prev = 0.0;
      for (double y = 0.0; y < 40.0; y += 0.05) {
        const double f = tn_cdf(d, y);
        CHECK(f >= prev);
        CHECK(f <= 1.0);
        prev = f;
      }
    }
  }

  SUBCASE("rejects non-finite arguments") {
    CHECK_THROWS_AS(tn_cdf({0.0, 1.0}, std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(validate(TruncNormal{0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(validate(TruncNormal{0.0, -1.0}), std::invalid_argument);
  }
}

TEST_CASE("tn_quantile inverts the CDF") {
  CHECK(tn_quantile({0.0, 1.0}, 0.0) == 0.0);
  // frozen from the bisection oracle
  CHECK(std::abs(tn_quantile({0.0, 1.0}, 0.5) - 0.6745) < 1e-4);
  CHECK(std::abs(tn_quantile({0.0, 1.0}, 0.5) -
                 quantile_by_bisection({0.0, 1.0}, 0.5)) < 1e-9);

  SUBCASE("roundtrip within 1e-9 across distributions and levels") {
    for (const TruncNormal d :
         {TruncNormal{0.0, 1.0}, TruncNormal{1.3, 0.8}, TruncNormal{-3.0, 2.0},
          TruncNormal{-12.0, 1.5}, TruncNormal{25.0, 5.0}}) {
      for (double p = 0.001; p <= 0.999; p += 0.0245) {
        const double q = tn_quantile(d, p);
        CHECK(q >= 0.0);
        CHECK(std::abs(tn_cdf(d, q) - p) < 1e-9);
      }
      for (double p : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9})
        CHECK(std::abs(tn_cdf(d, tn_quantile(d, p)) - p) < 1e-9);
    }
  }

  SUBCASE("rejects p outside [0, 1)") {
    CHECK_THROWS_AS(tn_quantile({0.0, 1.0}, 1.0), std::domain_error);
    CHECK_THROWS_AS(tn_quantile({0.0, 1.0}, -0.1), std::domain_error);
  }
}

TEST_CASE("tn_pit") {
  const TruncNormal d{1.2, 0.9};
  CHECK(tn_pit(d, tn_quantile(d, 0.5)) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(tn_pit(d, 0.0) == 0.0);
  CHECK_THROWS_AS(tn_pit(d, -0.1), std::invalid_argument);

  SUBCASE("self-sampled PIT is uniform") {
    Rng rng(20240517);
    std::vector<double> pits;
    pits.reserve(100000);
    for (int i = 0; i < 100000; ++i) {
      const double u = rng.uniform01();
      pits.push_back(tn_pit(d, tn_quantile(d, u)));
    }
    CHECK(test_util::ks_uniform(pits) < 0.01);
  }
}

TEST_CASE("tn_mean and tn_median") {
  // frozen: phi(0)/Phi(0) and the near-untruncated limit
  CHECK(std::abs(tn_mean({0.0, 1.0}) - 0.7979) < 1e-4);
  CHECK(std::abs(tn_mean({10.0, 1.0}) - 10.0) < 1e-6);
  CHECK(std::abs(tn_median({0.0, 1.0}) - 0.6745) < 1e-4);

  SUBCASE("mean matches the moment integral") {
    for (const TruncNormal d : {TruncNormal{0.0, 1.0}, TruncNormal{-1.0, 2.0},
                                TruncNormal{3.0, 0.5}}) {
      const double upper = std::max(d.mu, 0.0) + 12.0 * d.sigma;
      const int panels = 40000;
      const double h = upper / (2.0 * panels);
      const double normalizer = norm_cdf(d.mu / d.sigma);
      const auto integrand = [&](double t) {
        return t * norm_pdf((t - d.mu) / d.sigma) / (d.sigma * normalizer);
      };
      double sum = integrand(0.0) + integrand(upper);
      for (int i = 1; i < 2 * panels; ++i)
        sum += integrand(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
      CHECK(std::abs(tn_mean(d) - sum * h / 3.0) < 1e-7);
    }
  }

  SUBCASE("heavy truncation stays finite and nonnegative") {
    for (double ratio : {-8.0, -20.0, -40.0}) {
      const TruncNormal d{ratio, 1.0};
      CHECK(tn_mean(d) > 0.0);
      CHECK(tn_mean(d) < 1.0);
      CHECK(tn_median(d) > 0.0);
    }
  }
}

TEST_CASE("tn_crps closed form against the quadrature oracle") {
  // near-point-mass at the observation
  CHECK(tn_crps({2.0, 1e-9}, 2.0) <= 1e-8);

  // frozen via crps_numeric
  const double reference = tn_crps_numeric({0.0, 1.0}, 1.0);
  CHECK(std::abs(tn_crps({0.0, 1.0}, 1.0) - reference) < 1e-6);

  // truncation negligible: sigma (sqrt(2)-1)/sqrt(pi)
  const double untruncated = (std::sqrt(2.0) - 1.0) / std::sqrt(M_PI);
  CHECK(std::abs(tn_crps({5.0, 1.0}, 5.0) - 0.2337) < 1e-3);
  CHECK(std::abs(tn_crps({5.0, 1.0}, 5.0) - untruncated) < 1e-4);

  SUBCASE("72-point grid equivalence within 1e-6") {
    for (double ratio : {-3.0, -1.0, 0.0, 1.0, 3.0, 5.0})
      for (double sigma : {0.1, 1.0, 5.0}) {
        const double mu = ratio * sigma;
        const TruncNormal d{mu, sigma};
        for (double y : {0.0, 0.5 * sigma, std::max(mu, 0.0),
                         std::max(mu + 2.0 * sigma, 0.0)})
          CHECK(std::abs(tn_crps(d, y) - tn_crps_numeric(d, y)) < 1e-6);
      }
  }

  SUBCASE("log-space branch under heavy truncation") {
    for (double ratio : {-7.0, -12.0, -25.0}) {
      const TruncNormal d{ratio, 1.0};
      for (double y : {0.0, 0.05, 0.2, 1.0})
        CHECK(std::abs(tn_crps(d, y) - tn_crps_numeric(d, y)) < 1e-9);
    }
  }

  SUBCASE("minimized near the median, grows without bound beyond the bulk") {
    const TruncNormal d{3.0, 1.0};
    const double median = tn_median(d);
    const double at_median = tn_crps(d, median);
    for (double offset : {0.5, 1.0, 2.0}) {
      CHECK(at_median < tn_crps(d, median + offset));
      CHECK(at_median < tn_crps(d, std::max(0.0, median - offset)));
    }
    double prev = tn_crps(d, tn_quantile(d, 0.999));
    for (double y = 8.0; y < 40.0; y += 4.0) {
      const double score = tn_crps(d, y);
      CHECK(score > prev);
      prev = score;
    }
  }

  CHECK_THROWS_AS(tn_crps({0.0, 1.0}, -0.5), std::invalid_argument);
}

TEST_CASE("crps_numeric on hand-integrable CDFs") {
  // two-member step CDF {0, 2}: 0.25 on [0,1) plus 0.25 on [1,2)
  const auto step = [](double t) {
    if (t < 0.0)
      return 0.0;
    if (t < 2.0)
      return 0.5;
    return 1.0;
  };
  CHECK(std::abs(crps_numeric(step, 1.0, 0.0, 3.0) - 0.5) < 1e-9);

  // point mass at the observation scores zero
  const auto point_mass = [](double t) { return t >= 1.0 ? 1.0 : 0.0; };
  CHECK(crps_numeric(point_mass, 1.0, 0.0, 2.0) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(crps_numeric(step, 5.0, 0.0, 3.0), std::invalid_argument);
}
