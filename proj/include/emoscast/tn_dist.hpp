#ifndef EMOSCAST_TN_DIST_HPP
#define EMOSCAST_TN_DIST_HPP

// Normal distribution with location mu and scale sigma, left-truncated
// at zero: the predictive law for wind speed.  CDF, quantile, PIT,
// point summaries, and the CRPS both in closed form and by adaptive
// quadrature of its defining integral.

#include <functional>

namespace emoscast {

struct TruncNormal {
  double mu = 0.0;    // location, any real (m/s)
  double sigma = 1.0; // scale, > 0 (m/s)
};

// Throws std::invalid_argument unless sigma > 0 and both fields finite.
void validate(const TruncNormal& dist);

// F(y); 0 for y <= 0, approaches 1 as y -> inf.  Stable under heavy
// truncation (mu/sigma deeply negative) via log-space tail ratios.
double tn_cdf(const TruncNormal& dist, double y);

// Inverse CDF for p in [0, 1).  Analytic inversion through the normal
// quantile, polished by a bracketed Newton/bisection hybrid so that
// tn_cdf(tn_quantile(p)) = p to within 1e-9.
double tn_quantile(const TruncNormal& dist, double p);

// Probability integral transform: F evaluated at the observation.
double tn_pit(const TruncNormal& dist, double obs);

// Density; 0 for y < 0.
double tn_pdf(const TruncNormal& dist, double y);

double tn_mean(const TruncNormal& dist);
double tn_median(const TruncNormal& dist);

// Closed-form CRPS of the zero-truncated normal at observation obs >= 0.
// Matches crps_numeric on the same distribution to 1e-6.
double tn_crps(const TruncNormal& dist, double obs);

// CRPS by adaptive Simpson quadrature of integral [F(y) - 1{y>=obs}]^2 dy
// over [lower, upper], split at obs.  F must be a nondecreasing CDF on
// the interval and obs must lie inside it.  Serves as the independent
// oracle for tn_crps and for the raw-ensemble CRPS.
double crps_numeric(const std::function<double(double)>& cdf, double obs,
                    double lower, double upper);

// crps_numeric with the default truncation of the infinite upper limit:
// bounds [0, obs + max(10 sigma, 10)] plus an analytic bound on the
// discarded tail mass, which is added to the result.
double tn_crps_numeric(const TruncNormal& dist, double obs);

} // namespace emoscast

#endif
