#ifndef EMOSCAST_OPTIMIZE_HPP
#define EMOSCAST_OPTIMIZE_HPP

// Local minimizers for the mean-score objective: a derivative-free
// Nelder-Mead simplex and a BFGS variant with central-difference
// gradients.  Both are deterministic, never accept a point worse than
// the incumbent best, and report the incumbent trace.

#include <functional>
#include <vector>

namespace emoscast {

using ObjectiveFn = std::function<double(const std::vector<double>&)>;

enum class OptimMethod { DerivativeFreeSimplex, QuasiNewtonNumericGrad };

struct OptimOptions {
  OptimMethod method = OptimMethod::DerivativeFreeSimplex;
  int max_iterations = 500;
  double tolerance = 1e-6; // stop once an iteration can improve by less
  // Nelder-Mead restarts: rebuild the simplex at the incumbent after
  // convergence and polish again.
  int simplex_restarts = 1;
};

struct OptimResult {
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  // Incumbent best objective at every iteration that improved it;
  // starts with f(x0).  Nonincreasing by construction.
  std::vector<double> trace;
};

// Throws std::runtime_error if f(x0) is not finite.
OptimResult minimize(const ObjectiveFn& f, const std::vector<double>& x0,
                     const OptimOptions& options);

} // namespace emoscast

#endif
