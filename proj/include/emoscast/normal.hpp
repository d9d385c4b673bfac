#ifndef EMOSCAST_NORMAL_HPP
#define EMOSCAST_NORMAL_HPP

// Standard normal density, distribution and quantile functions.
// The CDF is evaluated through erfc so that the lower tail keeps full
// relative accuracy; log_cdf stays finite far beyond the underflow
// point of cdf itself.

namespace emoscast {

// phi(x) = exp(-x^2/2) / sqrt(2*pi)
double norm_pdf(double x);

// Phi(x), accurate in both tails.
double norm_cdf(double x);

// 1 - Phi(x) = Phi(-x), accurate for large positive x.
double norm_sf(double x);

// log Phi(x); uses an asymptotic expansion once erfc underflows (x < -36).
double norm_log_cdf(double x);

// Phi^{-1}(p) for p in (0, 1).  Rational initial guess refined by one
// Halley step against the erfc-based cdf; relative error near machine
// precision except in the extreme tails where the guess alone (~1e-9)
// is returned.
double norm_quantile(double p);

} // namespace emoscast

#endif
