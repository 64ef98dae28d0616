#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "gibbs/experiments.hpp"
#include "gibbs/gps.hpp"
#include "gibbs/mestimator.hpp"

using namespace gibbs;

namespace {

Dataset yang_he(std::size_t n, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.kind = QuantRegScenario{};
  spec.n = n;
  spec.seed = seed;
  return generate(spec).data;
}

// Least absolute deviations in two parameters is a linear program; some
// optimal vertex interpolates two observations. Enumerate every such line.
struct LadOracle {
  double theta0, theta1, risk;
};

LadOracle lad_by_vertex_enumeration(const Dataset& d) {
  const std::size_t n = d.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = d.row(i).covariates[1];
    y[i] = d.row(i).response;
  }
  LadOracle best{0, 0, std::numeric_limits<double>::infinity()};
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (x[a] == x[b]) continue;
      const double t1 = (y[b] - y[a]) / (x[b] - x[a]);
      const double t0 = y[a] - t1 * x[a];
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += std::abs(y[i] - t0 - t1 * x[i]);
      if (s < best.risk) best = {t0, t1, s};
    }
  }
  best.risk *= 0.5 / static_cast<double>(n);  // check loss at tau = 1/2
  return best;
}

}  // namespace

TEST_CASE("squared error recovers the sample mean") {
  const auto d = Dataset::from_values({1.0, 4.0, -2.0, 7.5, 0.25});
  const auto est = minimize_risk(d, LossModel::squared_error());
  CHECK(std::abs(est.theta_hat[0] - 2.15) < 1e-8);
  CHECK(est.converged);
}

TEST_CASE("intercept-only check loss recovers the median") {
  const auto d = Dataset::from_rows({{1}, {1}, {1}, {1}, {1}}, {1, 2, 3, 4, 100});
  const auto est = minimize_risk(d, LossModel::check(0.5, 1));
  CHECK(std::abs(est.theta_hat[0] - 3.0) < 1e-8);
  CHECK(est.risk_value == empirical_risk(est.theta_hat, d, LossModel::check(0.5, 1)));
}

TEST_CASE("median regression matches an exact vertex-enumeration oracle") {
  const auto d = yang_he(400, 2024);
  const auto oracle = lad_by_vertex_enumeration(d);
  const auto est = minimize_risk(d, LossModel::check(0.5, 2));
  CHECK(std::abs(est.risk_value - oracle.risk) <= 1e-6);
  CHECK(est.risk_value >= oracle.risk - 1e-12);
  // the sandwich standard errors at n = 400 are roughly 0.16 and 0.08
  CHECK(std::abs(est.theta_hat[0] - 2.0) < 3 * 0.16);
  CHECK(std::abs(est.theta_hat[1] - 1.0) < 3 * 0.08);
  CHECK(std::abs(est.risk_value - empirical_risk(est.theta_hat, d, LossModel::check(0.5, 2))) <=
        1e-12 * est.risk_value);
}

TEST_CASE("risk never exceeds the risk at the initializer") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (double tau : {0.25, 0.5, 0.75}) {
      const EmpiricalRisk risk(yang_he(150, seed), LossModel::check(tau, 2));
      const auto est = minimize_risk(risk);
      CHECK(est.risk_value <= risk(least_squares_initializer(risk)));
    }
  }
  ScenarioSpec spec;
  spec.kind = ClassificationScenario{};
  spec.n = 200;
  const EmpiricalRisk risk(generate(spec).data, scenario_loss(spec));
  CHECK(minimize_risk(risk).risk_value <= risk(least_squares_initializer(risk)));
}

TEST_CASE("restarts agree on convex risks") {
  const auto d = yang_he(200, 77);
  const auto loss = LossModel::check(0.5, 2);
  const auto ref = minimize_risk(d, loss, {.restarts = 1});
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    OptimizerConfig cfg;
    cfg.seed = seed;
    const auto est = minimize_risk(d, loss, cfg);
    CHECK(std::abs(est.risk_value - ref.risk_value) <= 1e-10);
  }
}

TEST_CASE("estimate is invariant to row order") {
  const auto d = yang_he(300, 5);
  std::vector<std::size_t> perm(d.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(1);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto loss = LossModel::check(0.5, 2);
  const auto a = minimize_risk(d, loss);
  const auto b = minimize_risk(d.subset(perm), loss);
  CHECK(std::abs(a.theta_hat[0] - b.theta_hat[0]) < 1e-8);
  CHECK(std::abs(a.theta_hat[1] - b.theta_hat[1]) < 1e-8);
}

TEST_CASE("nelder mead on smooth and kinked functions") {
  auto rosen = [](std::span<const double> x) {
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  const auto r = nelder_mead(rosen, {-1.2, 1.0}, {0.1, 0.1}, 20000, 1e-10, 1e-14);
  CHECK(r.converged);
  CHECK(std::abs(r.x[0] - 1.0) < 1e-5);
  CHECK(std::abs(r.x[1] - 1.0) < 1e-5);

  auto kink = [](std::span<const double> x) { return std::abs(x[0] - 0.3) + 2 * std::abs(x[1] + 1.7); };
  const auto k = nelder_mead(kink, {5.0, 5.0}, {1.0, 1.0}, 4000, 1e-10, 1e-12);
  CHECK(std::abs(k.x[0] - 0.3) < 1e-7);
  CHECK(std::abs(k.x[1] + 1.7) < 1e-7);

  auto flat = [](std::span<const double> x) { return x[0] * x[0]; };
  const auto capped = nelder_mead(flat, {100.0}, {1e-3}, 10, 1e-12, 1e-14);
  CHECK_FALSE(capped.converged);
  CHECK(capped.evaluations <= 12);
}

TEST_CASE("least squares initializer") {
  const auto d = Dataset::from_rows({{1, 0}, {1, 1}, {1, 2}}, {1, 3, 5});
  const EmpiricalRisk risk(d, LossModel::check(0.5, 2));
  const auto x0 = least_squares_initializer(risk);
  CHECK(x0[0] == doctest::Approx(1.0));
  CHECK(x0[1] == doctest::Approx(2.0));

  // labels +1 above the line x0 = x1 + 1; the discriminant boundary should be close
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 2000; ++i) {
    const double a = 3 * z(rng), b = 3 * z(rng);
    rows.push_back({a, b});
    y.push_back(a - b - 1.0 >= 0 ? 1.0 : -1.0);
  }
  const EmpiricalRisk cls(Dataset::from_rows(rows, y, ResponseKind::label),
                          LossModel::misclassification(0, 2));
  const auto c0 = least_squares_initializer(cls);
  CHECK(c0[0] == doctest::Approx(1.0).epsilon(0.2));
  CHECK(c0[1] == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("bias correction formula") {
  const ParamVector hat{1.0, 1.0};
  const std::vector<ParamVector> same{hat, hat, hat};
  CHECK(bias_corrected_estimate(hat, same) == hat);
  const std::vector<ParamVector> boot{{1.0, 0.8}, {1.2, 1.0}};
  const auto c = bias_corrected_estimate(hat, boot);
  CHECK(c[0] == doctest::Approx(0.9));
  CHECK(c[1] == doctest::Approx(1.1));
  CHECK_THROWS_AS(bias_corrected_estimate(hat, std::vector<ParamVector>{}), std::invalid_argument);
  CHECK_THROWS_AS(bias_corrected_estimate(hat, std::vector<ParamVector>{{1.0}}),
                  std::invalid_argument);
}

TEST_CASE("bootstrap bias correction shrinks with n") {
  const auto loss = LossModel::check(0.5, 2);
  OptimizerConfig cfg;
  cfg.restarts = 1;
  auto mean_shift = [&](std::size_t n) {
    double total = 0.0;
    constexpr int kReps = 50;
    for (int rep = 0; rep < kReps; ++rep) {
      const auto d = yang_he(n, 1000 + rep);
      const auto hat = minimize_risk(d, loss, cfg).theta_hat;
      std::vector<ParamVector> boot;
      for (const auto& b : bootstrap_resample(d, 20, 500 + rep)) {
        boot.push_back(minimize_risk(b, loss, cfg).theta_hat);
      }
      const auto corrected = bias_corrected_estimate(d, loss, boot, cfg);
      total += std::hypot(corrected[0] - hat[0], corrected[1] - hat[1]);
    }
    return total / kReps;
  };
  const double small = mean_shift(100);
  const double large = mean_shift(1600);
  INFO("mean |corrected - uncorrected|: n=100 " << small << ", n=1600 " << large);
  CHECK(large < small);
}

TEST_CASE("optimizer config validation") {
  const auto d = Dataset::from_values({1.0});
  CHECK_THROWS_AS(minimize_risk(d, LossModel::squared_error(), {.restarts = 0}),
                  std::invalid_argument);
  OptimizerConfig bad;
  bad.x_tol = 0.0;
  CHECK_THROWS_AS(minimize_risk(d, LossModel::squared_error(), bad), std::invalid_argument);
  CHECK_THROWS_AS(minimize_risk(d, LossModel::check(0.5, 2)), std::invalid_argument);
}
