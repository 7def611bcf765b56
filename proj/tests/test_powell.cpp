#include <catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "test_support.hpp"

using namespace topoforge;
using Catch::Approx;

namespace {

double rosenbrock(std::span<const double> x) {
  return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}

struct Quadratic {
  Eigen::MatrixXd a;
  Eigen::VectorXd center;
  double operator()(std::span<const double> x) const {
    const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) - center;
    return 0.5 * d.dot(a * d);
  }
};

// Random symmetric positive definite matrix with condition number <= 100.
Quadratic random_quadratic(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -1.0, 1.0);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[static_cast<Eigen::Index>(i)] = log_uniform(rng, 0.1, 10.0);
  Quadratic f{q * eig.asDiagonal() * q.transpose(), Eigen::VectorXd(n)};
  for (std::size_t i = 0; i < n; ++i) f.center[static_cast<Eigen::Index>(i)] = uniform(rng, -5.0, 5.0);
  return f;
}

}  // namespace

TEST_CASE("line minimization examples", "[line]") {
  const auto quad = line_minimize([](double a) { return (a - 2.0) * (a - 2.0); }, -10.0, 10.0, 1e-8);
  CHECK(quad.step == Approx(2.0).margin(1e-6));
  const auto absval = line_minimize([](double a) { return std::abs(a); }, -3.0, 7.0, 1e-8);
  CHECK(absval.step == Approx(0.0).margin(1e-6));
  const auto mono = line_minimize([](double a) { return 3.0 * a; }, 1.0, 4.0, 1e-8);
  CHECK(mono.step == 1.0);
  CHECK(mono.value == 3.0);
}

TEST_CASE("line minimization retries after non-finite values", "[line]") {
  // Non-finite away from the middle of the bracket.
  auto f = [](double a) { return std::abs(a) > 1.0 ? std::nan("") : (a - 0.3) * (a - 0.3); };
  const auto r = line_minimize(f, -100.0, 100.0, 1e-8);
  CHECK(r.step == Approx(0.3).margin(1e-6));
  CHECK_THROWS_AS(line_minimize([](double) { return std::nan(""); }, 0.0, 1.0), NumericFailure);
}

TEST_CASE("minimize a one-dimensional parabola", "[powell]") {
  const auto r = minimize([](std::span<const double> x) { return (x[0] - 3.0) * (x[0] - 3.0); }, {0.0});
  CHECK(r.x_star[0] == Approx(3.0).margin(1e-5));
  CHECK(r.f_star <= 1e-10);
  CHECK(r.converged);
}

TEST_CASE("minimize Rosenbrock", "[powell]") {
  OptimizerConfig cfg;
  cfg.max_evaluations = 5000;
  cfg.f_tolerance = 1e-12;
  const auto r = minimize(rosenbrock, {-1.2, 1.0}, cfg);
  CHECK(r.x_star[0] == Approx(1.0).margin(1e-6));
  CHECK(r.x_star[1] == Approx(1.0).margin(1e-6));
  CHECK(r.f_star <= 1e-10);
  CHECK(r.evaluations <= 5000);
}

TEST_CASE("constant objective converges after one sweep", "[powell]") {
  const std::vector<double> x0{0.5, -2.0, 7.0};
  const auto r = minimize([](std::span<const double>) { return 4.0; }, x0);
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.x_star == x0);
  CHECK(r.f_star == 4.0);
}

TEST_CASE("result invariants", "[powell][property]") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto q = random_quadratic(4, seed);
    std::vector<double> x0(4, 0.0);
    const auto r = minimize(std::cref(q), x0);
    CHECK(r.f_star == q(r.x_star));
    CHECK(r.evaluations >= r.iterations);
    CHECK(r.f_star <= q(x0));
    for (std::size_t i = 1; i < r.best_per_iteration.size(); ++i)
      CHECK(r.best_per_iteration[i] <= r.best_per_iteration[i - 1]);
  }
}

TEST_CASE("evaluation budget is respected", "[powell][property]") {
  for (std::size_t budget : {1u, 2u, 7u, 50u, 333u}) {
    OptimizerConfig cfg;
    cfg.max_evaluations = budget;
    std::size_t calls = 0;
    const auto r = minimize(
        [&](std::span<const double> x) {
          ++calls;
          return rosenbrock(x);
        },
        {-1.2, 1.0}, cfg);
    CHECK(r.evaluations <= budget);
    CHECK(calls == r.evaluations);
    CHECK(r.f_star == rosenbrock(r.x_star));
  }
}

TEST_CASE("minimize is deterministic", "[powell]") {
  const auto a = minimize(rosenbrock, {-1.2, 1.0});
  const auto b = minimize(rosenbrock, {-1.2, 1.0});
  CHECK(a.x_star == b.x_star);
  CHECK(a.f_star == b.f_star);
  CHECK(a.evaluations == b.evaluations);
}

TEST_CASE("non-finite objective values are rejected steps", "[powell]") {
  auto f = [](std::span<const double> x) { return x[0] < 1.0 ? std::nan("") : (x[0] - 2.0) * (x[0] - 2.0) + x[1] * x[1]; };
  const auto r = minimize(f, {5.0, 3.0});
  CHECK(r.x_star[0] == Approx(2.0).margin(1e-4));
  CHECK(r.x_star[1] == Approx(0.0).margin(1e-4));
  CHECK_THROWS(minimize(f, {0.0, 0.0}));
}

TEST_CASE("convex quadratics converge in n+2 sweeps", "[powell][property]") {
  for (std::size_t n = 1; n <= 10; ++n) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto q = random_quadratic(n, 100 * n + seed);
      OptimizerConfig cfg;
      cfg.max_iterations = n + 2;
      const auto r = minimize(std::cref(q), std::vector<double>(n, 0.0), cfg);
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(r.x_star[i] - q.center[static_cast<Eigen::Index>(i)]));
      INFO("n=" << n << " seed=" << seed << " sweeps=" << r.iterations);
      CHECK(err <= 1e-8);
    }
  }
}
