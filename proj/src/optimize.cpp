#include "emoscast/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace emoscast {

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Tracks the best point ever evaluated, including rejected trials.
struct Incumbent {
  Vec x;
  double f = 0.0;
  std::vector<double> trace;

  void offer(const Vec& candidate, double value) {
    if (value < f) {
      x = candidate;
      f = value;
      trace.push_back(value);
    }
  }
};

OptimResult nelder_mead(const ObjectiveFn& f, const Vec& x0,
                        const OptimOptions& opt, double f0) {
  const std::size_t n = x0.size();
  Incumbent best{x0, f0, {f0}};
  int iterations = 0;
  bool converged = false;

  const auto eval = [&](const Vec& x) {
    const double v = f(x);
    best.offer(x, v);
    return v;
  };

  for (int restart = 0; restart <= opt.simplex_restarts; ++restart) {
    // Simplex around the current incumbent; restarts use a finer step.
    const double scale = restart == 0 ? 0.1 : 0.02;
    std::vector<Vec> simplex(n + 1, best.x);
    Vec values(n + 1);
    values[0] = best.f;
    for (std::size_t i = 0; i < n; ++i) {
      simplex[i + 1][i] += scale * std::max(std::abs(best.x[i]), 1.0);
      values[i + 1] = eval(simplex[i + 1]);
    }

    converged = false;
    while (iterations < opt.max_iterations) {
      ++iterations;
      std::vector<std::size_t> order(n + 1);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        return values[a] < values[b];
      });
      const std::size_t lo = order.front();
      const std::size_t hi = order.back();
      const std::size_t second_hi = order[n - 1];

      if (values[hi] - values[lo] < opt.tolerance) {
        converged = true;
        break;
      }

      Vec centroid(n, 0.0);
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == hi)
          continue;
        for (std::size_t j = 0; j < n; ++j)
          centroid[j] += simplex[i][j];
      }
      for (double& c : centroid)
        c /= double(n);

      const auto blend = [&](double t) {
        Vec x(n);
        for (std::size_t j = 0; j < n; ++j)
          x[j] = centroid[j] + t * (centroid[j] - simplex[hi][j]);
        return x;
      };

      const Vec reflected = blend(1.0);
      const double fr = eval(reflected);
      if (fr < values[lo]) {
        const Vec expanded = blend(2.0);
        const double fe = eval(expanded);
        if (fe < fr) {
          simplex[hi] = expanded;
          values[hi] = fe;
        } else {
          simplex[hi] = reflected;
          values[hi] = fr;
        }
        continue;
      }
      if (fr < values[second_hi]) {
        simplex[hi] = reflected;
        values[hi] = fr;
        continue;
      }
      const bool outside = fr < values[hi];
      const Vec contracted = blend(outside ? 0.5 : -0.5);
      const double fc = eval(contracted);
      if ((outside && fc <= fr) || (!outside && fc < values[hi])) {
        simplex[hi] = contracted;
        values[hi] = fc;
        continue;
      }
      // Shrink toward the best vertex.
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == lo)
          continue;
        for (std::size_t j = 0; j < n; ++j)
          simplex[i][j] = simplex[lo][j] + 0.5 * (simplex[i][j] - simplex[lo][j]);
        values[i] = eval(simplex[i]);
      }
    }
    if (iterations >= opt.max_iterations)
      break;
  }

  return {best.x, best.f, iterations, converged, std::move(best.trace)};
}

Vec numeric_gradient(const ObjectiveFn& f, const Vec& x) {
  const std::size_t n = x.size();
  Vec g(n);
  Vec probe = x;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = 1e-6 * std::max(std::abs(x[i]), 1.0);
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

OptimResult bfgs(const ObjectiveFn& f, const Vec& x0, const OptimOptions& opt,
                 double f0) {
  const std::size_t n = x0.size();
  Incumbent best{x0, f0, {f0}};
  Vec x = x0;
  double fx = f0;
  Vec g = numeric_gradient(f, x);
  std::vector<Vec> h_inv(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    h_inv[i][i] = 1.0;

  int iterations = 0;
  bool converged = false;
  while (iterations < opt.max_iterations) {
    ++iterations;
    Vec direction(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        direction[i] -= h_inv[i][j] * g[j];

    double slope = dot(g, direction);
    if (slope >= 0.0) {
      // Reset a corrupted approximation to steepest descent.
      for (std::size_t i = 0; i < n; ++i) {
        std::fill(h_inv[i].begin(), h_inv[i].end(), 0.0);
        h_inv[i][i] = 1.0;
        direction[i] = -g[i];
      }
      slope = dot(g, direction);
      if (slope >= 0.0) {
        converged = true;
        break;
      }
    }

    double step = 1.0;
    Vec x_next(n);
    double f_next = fx;
    bool accepted = false;
    while (step > 1e-12) {
      for (std::size_t i = 0; i < n; ++i)
        x_next[i] = x[i] + step * direction[i];
      const double trial = f(x_next);
      if (std::isfinite(trial)) {
        best.offer(x_next, trial);
        if (trial <= fx + 1e-4 * step * slope) {
          f_next = trial;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      converged = true;
      break;
    }

    const Vec g_next = numeric_gradient(f, x_next);
    Vec s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_next[i] - x[i];
      y[i] = g_next[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12) {
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded to
      //   H - rho (s hy^T + hy s^T) + (rho^2 yHy + rho) s s^T
      // with hy = H y (H stays symmetric).
      const double rho = 1.0 / sy;
      Vec hy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          hy[i] += h_inv[i][j] * y[j];
      const double yhy = dot(y, hy);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          h_inv[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) +
                         (rho * rho * yhy + rho) * s[i] * s[j];
    }

    const double improvement = fx - f_next;
    x = x_next;
    fx = f_next;
    g = g_next;
    if (improvement < opt.tolerance) {
      converged = true;
      break;
    }
  }

  return {best.x, best.f, iterations, converged, std::move(best.trace)};
}

} // namespace

OptimResult minimize(const ObjectiveFn& f, const std::vector<double>& x0,
                     const OptimOptions& options) {
  if (x0.empty())
    throw std::invalid_argument("minimize: empty start point");
  if (options.tolerance <= 0.0)
    throw std::invalid_argument("minimize: tolerance must be positive");
  if (options.max_iterations < 0)
    throw std::invalid_argument("minimize: negative iteration budget");
  const double f0 = f(x0);
  if (!std::isfinite(f0))
    throw std::runtime_error("minimize: objective not finite at start point");
  if (options.max_iterations == 0)
    return {x0, f0, 0, false, {f0}};
  if (options.method == OptimMethod::DerivativeFreeSimplex)
    return nelder_mead(f, x0, options, f0);
  return bfgs(f, x0, options, f0);
}

} // namespace emoscast
