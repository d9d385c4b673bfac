#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "emoscast/optimize.hpp"

using namespace emoscast;

namespace {

double sphere(const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - double(i + 1);
    s += double(i + 1) * d * d;
  }
  return s;
}

double rosenbrock(const std::vector<double>& x) {
  const double a = x[1] - x[0] * x[0];
  const double b = 1.0 - x[0];
  return 100.0 * a * a + b * b;
}

} // namespace

TEST_CASE("both methods minimize smooth objectives") {
  for (OptimMethod method : {OptimMethod::DerivativeFreeSimplex,
                             OptimMethod::QuasiNewtonNumericGrad}) {
    OptimOptions options;
    options.method = method;
    options.max_iterations = 2000;
    options.tolerance = 1e-10;

    const OptimResult r1 = minimize(sphere, {0, 0, 0, 0, 0, 0}, options);
    CHECK(r1.objective < 1e-8);
    const OptimResult r2 = minimize(rosenbrock, {-1.2, 1.0}, options);
    CHECK(std::abs(r2.x[0] - 1.0) < 1e-3);
    CHECK(std::abs(r2.x[1] - 1.0) < 1e-3);
  }
}

TEST_CASE("incumbent trace is monotone and starts at f(x0)") {
  OptimOptions options;
  const OptimResult r = minimize(sphere, {4, 4, 4, 4, 4, 4}, options);
  REQUIRE(!r.trace.empty());
  CHECK(r.trace.front() == doctest::Approx(sphere({4, 4, 4, 4, 4, 4})));
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    CHECK(r.trace[i] <= r.trace[i - 1]);
  CHECK(r.objective == doctest::Approx(r.trace.back()));
}

TEST_CASE("zero iteration budget returns the start point") {
  OptimOptions options;
  options.max_iterations = 0;
  const OptimResult r = minimize(sphere, {5, 5, 5, 5, 5, 5}, options);
  CHECK(r.x == std::vector<double>{5, 5, 5, 5, 5, 5});
  CHECK(r.objective == doctest::Approx(sphere(r.x)));
  CHECK(r.iterations == 0);
}

TEST_CASE("result never scores worse than the start point") {
  for (OptimMethod method : {OptimMethod::DerivativeFreeSimplex,
                             OptimMethod::QuasiNewtonNumericGrad}) {
    OptimOptions options;
    options.method = method;
    options.max_iterations = 3;
    const std::vector<double> x0 = {2.5, -1.0};
    const OptimResult r = minimize(rosenbrock, x0, options);
    CHECK(r.objective <= rosenbrock(x0));
  }
}

TEST_CASE("non-finite start objective throws") {
  const ObjectiveFn bad = [](const std::vector<double>&) {
    return std::nan("");
  };
  OptimOptions options;
  CHECK_THROWS_AS(minimize(bad, {0.0}, options), std::runtime_error);
}

TEST_CASE("deterministic given identical inputs") {
  OptimOptions options;
  const OptimResult a = minimize(rosenbrock, {-1.2, 1.0}, options);
  const OptimResult b = minimize(rosenbrock, {-1.2, 1.0}, options);
  CHECK(a.x == b.x);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
}
