#include "emoscast/tn_dist.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

#include "emoscast/normal.hpp"

namespace emoscast {

namespace {

constexpr double kSqrtPi = 1.77245385090551602730;
constexpr double kSqrt2 = 1.41421356237309504880;

// mu/sigma below this switches the Phi-ratio arithmetic to log space;
// Phi(mu/sigma)^-2 in the closed-form CRPS is unusable well before the
// CDF itself underflows.
constexpr double kLogSpaceRatio = -6.0;

double log_norm_pdf(double x) {
  return -0.5 * x * x - 0.91893853320467274178;
}

// Globally adaptive Gauss-Kronrod 7/15 quadrature.  The irrational node
// placement matters here: step CDFs with evenly spaced jumps fool
// equal-spacing rules like Simpson (their node values fall exactly on a
// low-degree polynomial, zeroing the error estimate), while the G7/K15
// discrepancy stays visible and drives subdivision down to the jumps.
struct GkEstimate {
  double value = 0.0;
  double error = 0.0;
};

GkEstimate gauss_kronrod_15(const std::function<double(double)>& f, double a,
                            double b) {
  static const double nodes[8] = {
      0.991455371120813, 0.949107912342759, 0.864864423359769,
      0.741531185599394, 0.586087235467691, 0.405845151377397,
      0.207784955007898, 0.0};
  static const double kronrod_w[8] = {
      0.022935322010529, 0.063092092629979, 0.104790010322250,
      0.140653259715525, 0.169004726639267, 0.190350578064785,
      0.204432940075298, 0.209482141084728};
  // Gauss-7 weights for nodes 1, 3, 5, 7 of the Kronrod set.
  static const double gauss_w[4] = {0.129484966168870, 0.279705391489277,
                                    0.381830050505119, 0.417959183673469};
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double kronrod = 0.0;
  double gauss = 0.0;
  double outer[2][2] = {{0.0, 0.0}, {0.0, 0.0}}; // two outermost node pairs
  for (int i = 0; i < 8; ++i) {
    const double offset = half * nodes[i];
    double pair;
    if (i == 7) {
      pair = f(center);
    } else {
      const double lo = f(center - offset);
      const double hi = f(center + offset);
      pair = lo + hi;
      if (i < 2) {
        outer[i][0] = lo;
        outer[i][1] = hi;
      }
    }
    kronrod += kronrod_w[i] * pair;
    if (i % 2 == 1)
      gauss += gauss_w[i / 2] * pair;
  }

  // A jump hiding between a panel edge and the outermost node leaves
  // K - G at zero.  For the monotone integrands used here, variation in
  // that sliver far beyond what the local slope at the edge explains
  // must be a hidden jump; book it into the error so the panel splits.
  const double sliver = half * (1.0 - nodes[0]);
  const double edge_gap = half * (nodes[0] - nodes[1]);
  const double slope_allowance = 3.0 * sliver / edge_gap;
  const double left_excess =
      std::max(0.0, std::abs(outer[0][0] - f(a)) -
                        slope_allowance * std::abs(outer[1][0] - outer[0][0]));
  const double right_excess =
      std::max(0.0, std::abs(f(b) - outer[0][1]) -
                        slope_allowance * std::abs(outer[0][1] - outer[1][1]));
  return {kronrod * half, std::abs(kronrod - gauss) * half +
                              sliver * (left_excess + right_excess)};
}

double adaptive_gauss_kronrod(const std::function<double(double)>& f, double a,
                              double b, double tol) {
  if (!(b > a))
    return 0.0;

  struct Panel {
    double a, b;
    GkEstimate estimate;
    bool operator<(const Panel& other) const {
      return estimate.error < other.estimate.error;
    }
  };
  std::priority_queue<Panel> queue;
  queue.push({a, b, gauss_kronrod_15(f, a, b)});
  double total_error = queue.top().estimate.error;
  double settled_value = 0.0; // panels at floating-point resolution
  constexpr int kMaxSplits = 8000;
  for (int split = 0; split < kMaxSplits && total_error > tol; ++split) {
    const Panel worst = queue.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(worst.a < mid && mid < worst.b)) {
      // cannot subdivide further; keep its value, retire its error
      queue.pop();
      settled_value += worst.estimate.value;
      total_error -= worst.estimate.error;
      continue;
    }
    queue.pop();
    total_error -= worst.estimate.error;
    Panel left{worst.a, mid, gauss_kronrod_15(f, worst.a, mid)};
    Panel right{mid, worst.b, gauss_kronrod_15(f, mid, worst.b)};
    total_error += left.estimate.error + right.estimate.error;
    queue.push(std::move(left));
    queue.push(std::move(right));
  }
  double value = settled_value;
  while (!queue.empty()) {
    value += queue.top().estimate.value;
    queue.pop();
  }
  if (total_error > std::max(1e-9, 1e-7 * std::abs(value)))
    throw std::runtime_error("crps_numeric: quadrature did not converge");
  return value;
}

// Exact integral of Phi-bar(z)^2 over [a, inf); the analytic tail that
// the default quadrature bounds discard.
double sf_squared_tail(double a) {
  const double sf = norm_sf(a);
  const double value = 2.0 * norm_pdf(a) * sf - a * sf * sf -
                       norm_sf(kSqrt2 * a) / kSqrtPi;
  return std::max(value, 0.0);
}

} // namespace

void validate(const TruncNormal& dist) {
  if (!(std::isfinite(dist.mu) && std::isfinite(dist.sigma)) ||
      !(dist.sigma > 0.0))
    throw std::invalid_argument(
        "TruncNormal requires finite mu and sigma > 0");
}

double tn_cdf(const TruncNormal& dist, double y) {
  validate(dist);
  if (!std::isfinite(y))
    throw std::invalid_argument("tn_cdf: non-finite argument");
  if (y <= 0.0)
    return 0.0;
  const double c = dist.mu / dist.sigma;
  const double z = (y - dist.mu) / dist.sigma;
  if (z <= 0.0) {
    // y <= mu, hence c >= 0 and the plain form has no cancellation.
    const double value = (norm_cdf(z) - norm_cdf(-c)) / norm_cdf(c);
    return std::clamp(value, 0.0, 1.0);
  }
  double ratio; // Phi-bar(z) / Phi(c)
  if (c > kLogSpaceRatio)
    ratio = norm_sf(z) / norm_cdf(c);
  else
    ratio = std::exp(norm_log_cdf(-z) - norm_log_cdf(c));
  return std::clamp(1.0 - ratio, 0.0, 1.0);
}

double tn_pdf(const TruncNormal& dist, double y) {
  validate(dist);
  if (y < 0.0 || !std::isfinite(y))
    return 0.0;
  const double c = dist.mu / dist.sigma;
  const double z = (y - dist.mu) / dist.sigma;
  if (c > kLogSpaceRatio)
    return norm_pdf(z) / (dist.sigma * norm_cdf(c));
  return std::exp(log_norm_pdf(z) - norm_log_cdf(c)) / dist.sigma;
}

double tn_quantile(const TruncNormal& dist, double p) {
  validate(dist);
  if (!(p >= 0.0 && p < 1.0))
    throw std::domain_error("tn_quantile: p must lie in [0, 1)");
  if (p == 0.0)
    return 0.0;

  const double c = dist.mu / dist.sigma;
  const double cdf_c = norm_cdf(c);

  // Analytic start: Phi(-z) = (1-p) Phi(c).
  double q;
  if (cdf_c > 1e-300) {
    const double v = (1.0 - p) * cdf_c;
    double z;
    if (v <= 0.5) {
      z = -norm_quantile(v);
    } else {
      const double w = norm_sf(c) + p * cdf_c; // 1 - v without cancellation
      z = norm_quantile(w);
    }
    q = std::max(0.0, dist.mu + dist.sigma * z);
  } else {
    // Deep truncation: solve log Phi(-z) = log(1-p) + log Phi(c) by Newton.
    const double target = std::log1p(-p) + norm_log_cdf(c);
    double z = std::max(1.0, -c);
    for (int i = 0; i < 64; ++i) {
      const double g = norm_log_cdf(-z) - target;
      const double dg = -std::exp(log_norm_pdf(z) - norm_log_cdf(-z));
      const double step = g / dg;
      z -= step;
      if (std::abs(step) < 1e-13 * std::max(1.0, std::abs(z)))
        break;
    }
    q = std::max(0.0, dist.mu + dist.sigma * z);
  }

  // Bracketed Newton/bisection polish on the CDF itself.
  double lo = 0.0;
  double hi = std::max(dist.mu, 0.0) + 10.0 * dist.sigma;
  while (tn_cdf(dist, hi) < p)
    hi = 2.0 * hi + 10.0 * dist.sigma;
  q = std::clamp(q, lo, hi);
  for (int i = 0; i < 64; ++i) {
    const double err = tn_cdf(dist, q) - p;
    if (err > 0.0)
      hi = q;
    else
      lo = q;
    if (std::abs(err) <= 1e-12)
      break;
    const double density = tn_pdf(dist, q);
    double next = density > 0.0 ? q - err / density : q;
    if (!(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    if (next == q)
      break;
    q = next;
  }
  return q;
}

double tn_pit(const TruncNormal& dist, double obs) {
  if (obs < 0.0)
    throw std::invalid_argument("tn_pit: negative observation");
  return tn_cdf(dist, obs);
}

double tn_mean(const TruncNormal& dist) {
  validate(dist);
  const double c = dist.mu / dist.sigma;
  double hazard; // phi(c)/Phi(c)
  if (c > kLogSpaceRatio)
    hazard = norm_pdf(c) / norm_cdf(c);
  else
    hazard = std::exp(log_norm_pdf(c) - norm_log_cdf(c));
  return std::max(0.0, dist.mu + dist.sigma * hazard);
}

double tn_median(const TruncNormal& dist) { return tn_quantile(dist, 0.5); }

double tn_crps(const TruncNormal& dist, double obs) {
  validate(dist);
  if (obs < 0.0 || !std::isfinite(obs))
    throw std::invalid_argument("tn_crps: observation must be finite and >= 0");
  const double c = dist.mu / dist.sigma;
  const double z = (obs - dist.mu) / dist.sigma;

  // sigma Phi(c)^-2 [ z Phi(c)(2 Phi(z) + Phi(c) - 2)
  //                   + 2 phi(z) Phi(c) - Phi(sqrt2 c)/sqrt(pi) ],
  // regrouped into Phi ratios so each factor stays representable.
  double sf_ratio;   // Phi-bar(z)/Phi(c)
  double pdf_ratio;  // phi(z)/Phi(c)
  double wide_ratio; // Phi(sqrt2 c)/Phi(c)^2
  if (c > kLogSpaceRatio) {
    const double cdf_c = norm_cdf(c);
    sf_ratio = norm_sf(z) / cdf_c;
    pdf_ratio = norm_pdf(z) / cdf_c;
    wide_ratio = norm_cdf(kSqrt2 * c) / (cdf_c * cdf_c);
  } else {
    const double log_cdf_c = norm_log_cdf(c);
    sf_ratio = std::exp(norm_log_cdf(-z) - log_cdf_c);
    pdf_ratio = std::exp(log_norm_pdf(z) - log_cdf_c);
    wide_ratio = std::exp(norm_log_cdf(kSqrt2 * c) - 2.0 * log_cdf_c);
  }
  return dist.sigma * (z * (1.0 - 2.0 * sf_ratio) + 2.0 * pdf_ratio -
                       wide_ratio / kSqrtPi);
}

double crps_numeric(const std::function<double(double)>& cdf, double obs,
                    double lower, double upper) {
  if (!(std::isfinite(lower) && std::isfinite(upper) && std::isfinite(obs)))
    throw std::invalid_argument("crps_numeric: non-finite bounds");
  if (!(lower <= obs && obs <= upper))
    throw std::invalid_argument("crps_numeric: obs outside [lower, upper]");
  constexpr double kTol = 1e-12;
  const auto below = [&cdf](double t) {
    const double f = cdf(t);
    return f * f;
  };
  const auto above = [&cdf](double t) {
    const double f = 1.0 - cdf(t);
    return f * f;
  };
  return adaptive_gauss_kronrod(below, lower, obs, kTol) +
         adaptive_gauss_kronrod(above, obs, upper, kTol);
}

double tn_crps_numeric(const TruncNormal& dist, double obs) {
  validate(dist);
  const double upper = obs + std::max(10.0 * dist.sigma, 10.0);
  const auto cdf = [&dist](double y) { return tn_cdf(dist, y); };
  double value = crps_numeric(cdf, obs, 0.0, upper);
  const double c = dist.mu / dist.sigma;
  if (c > kLogSpaceRatio) {
    // Tail above `upper`: (1-F)^2 integrates to sigma/Phi(c)^2 times the
    // Phi-bar^2 tail.  Below the log-space threshold the ratio is under
    // exp(-120) and is dropped.
    const double cdf_c = norm_cdf(c);
    const double z_upper = (upper - dist.mu) / dist.sigma;
    value += dist.sigma * sf_squared_tail(z_upper) / (cdf_c * cdf_c);
  }
  return value;
}

} // namespace emoscast
