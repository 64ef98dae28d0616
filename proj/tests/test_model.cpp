#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "gibbs/model.hpp"

using namespace gibbs;

namespace {

Observation obs(const std::vector<double>& x, double y) { return {x, y}; }

// Reference mean of pointwise losses, summed left to right.
double naive_risk(const ParamVector& theta, const Dataset& data, const LossModel& loss) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) s += loss(theta, data.row(i));
  return s / static_cast<double>(data.size());
}

Dataset random_regression(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> z;
  std::vector<double> cov, y;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = z(rng);
    cov.push_back(1.0);
    cov.push_back(x);
    y.push_back(1.0 + 2.0 * x + z(rng));
  }
  return Dataset(cov, 2, y);
}

}  // namespace

TEST_CASE("check loss examples") {
  const std::vector<double> x{1.0, 2.0};
  // x'theta = 1 + 2*1 = 3
  CHECK(check_loss(ParamVector{1.0, 1.0}, obs(x, 3.0), 0.3) == 0.0);
  CHECK(check_loss(ParamVector{1.0, 1.0}, obs(x, 5.0), 0.5) == doctest::Approx(1.0));
  CHECK(check_loss(ParamVector{1.0, 1.0}, obs(x, 1.0), 0.25) == doctest::Approx(1.5));
  CHECK_THROWS_AS(check_loss(ParamVector{1.0}, obs(x, 1.0), 0.5), std::invalid_argument);
}

TEST_CASE("misclassification loss examples") {
  // z = x_0 - theta0 - theta1 * x_1 with j = 0
  const ParamVector theta{0.0, 0.0};
  CHECK(misclassification_loss(theta, obs({3.0, 0.0}, 1.0), 0) == 0.0);
  CHECK(misclassification_loss(theta, obs({-3.0, 0.0}, 1.0), 0) == 2.0);
  CHECK(misclassification_loss(theta, obs({-3.0, 0.0}, -1.0), 0) == 0.0);
  // sign(0) = +1
  CHECK(misclassification_loss(theta, obs({0.0, 0.0}, 1.0), 0) == 0.0);
  CHECK(misclassification_loss(theta, obs({0.0, 0.0}, -1.0), 0) == 2.0);
  CHECK_THROWS_AS(misclassification_loss(theta, obs({1.0, 0.0}, 0.5), 0), std::invalid_argument);
  // distinguished covariate in second position: z = x_1 - theta0 - theta1 * x_0
  CHECK(misclassification_loss(ParamVector{0.0, 1.0}, obs({2.0, 1.0}, 1.0), 1) == 2.0);
}

TEST_CASE("squared error loss examples") {
  CHECK(squared_error_loss(ParamVector{2.0}, obs({}, 2.0)) == 0.0);
  CHECK(squared_error_loss(ParamVector{1.0}, obs({}, 3.0)) == 4.0);
  CHECK(squared_error_loss(ParamVector{1.0}, obs({}, -1.0)) == 4.0);
  CHECK_THROWS_AS(squared_error_loss(ParamVector{1.0, 2.0}, obs({}, 1.0)), std::invalid_argument);
}

TEST_CASE("loss model validation") {
  CHECK_THROWS_AS(LossModel::check(0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(LossModel::check(1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(LossModel::misclassification(2, 2), std::invalid_argument);
  const auto data = Dataset::from_values({1.0, 2.0});
  CHECK_THROWS_AS(LossModel::check(0.5, 2).validate(data), std::invalid_argument);
  CHECK_THROWS_AS(LossModel::misclassification(0, 1).validate(data), std::invalid_argument);
  CHECK_NOTHROW(LossModel::squared_error().validate(data));
}

TEST_CASE("empirical risk examples") {
  CHECK(empirical_risk(ParamVector{1.0}, Dataset::from_values({0.0, 2.0}),
                       LossModel::squared_error()) == doctest::Approx(1.0));

  SUBCASE("median minimizes the absolute-deviation risk on a grid") {
    const auto data = Dataset::from_rows({{1}, {1}, {1}, {1}, {1}}, {4.0, -1.0, 7.5, 2.0, 3.0});
    const auto loss = LossModel::check(0.5, 1);
    const double at_median = empirical_risk(ParamVector{3.0}, data, loss);
    double grid_min = std::numeric_limits<double>::infinity();
    double grid_arg = 0.0;
    for (int i = 0; i <= 20000; ++i) {
      const double t = -5.0 + i * 1e-3;
      const double r = empirical_risk(ParamVector{t}, data, loss);
      if (r < grid_min) {
        grid_min = r;
        grid_arg = t;
      }
    }
    CHECK(grid_arg == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(at_median <= grid_min + 1e-15);
  }

  SUBCASE("perfectly separated labels have zero risk at the true hyperplane") {
    // label +1 iff x0 >= x1
    const auto data = Dataset::from_rows({{2, 1}, {5, 0}, {0, 3}, {1, 4}}, {1, 1, -1, -1},
                                         ResponseKind::label);
    CHECK(empirical_risk(ParamVector{0.0, 1.0}, data, LossModel::misclassification(0, 2)) == 0.0);
    // each error counts 2
    CHECK(empirical_risk(ParamVector{0.0, -1.0}, data, LossModel::misclassification(0, 2)) ==
          doctest::Approx(1.0));
  }

  CHECK_THROWS_AS(Dataset::from_values({}), std::invalid_argument);
}

TEST_CASE("empirical risk agrees with naive summation") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  for (std::size_t n : {1u, 17u, 129u, 1000u, 10000u}) {
    const auto data = random_regression(rng, n);
    for (double tau : {0.1, 0.5, 0.9}) {
      const auto loss = LossModel::check(tau, 2);
      for (int rep = 0; rep < 5; ++rep) {
        const ParamVector theta{z(rng), z(rng)};
        const double fast = empirical_risk(theta, data, loss);
        const double ref = naive_risk(theta, data, loss);
        CHECK(fast >= 0.0);
        CHECK(std::abs(fast - ref) <= 1e-12 * std::abs(ref));
      }
    }
    std::vector<double> values(n);
    for (auto& v : values) v = 3.0 + 2.0 * z(rng);
    const auto sample = Dataset::from_values(values);
    const ParamVector theta{z(rng)};
    const double ref = naive_risk(theta, sample, LossModel::squared_error());
    CHECK(std::abs(empirical_risk(theta, sample, LossModel::squared_error()) - ref) <=
          1e-12 * ref);
  }
}

TEST_CASE("empirical risk is exactly invariant to row order and merges duplicates") {
  std::mt19937_64 rng(3);
  const auto data = random_regression(rng, 500);
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto shuffled = data.subset(perm);
  const auto loss = LossModel::check(0.5, 2);
  const ParamVector theta{0.3, 1.7};
  CHECK(empirical_risk(theta, data, loss) == empirical_risk(theta, shuffled, loss));

  std::vector<std::size_t> doubled(perm);
  doubled.insert(doubled.end(), perm.begin(), perm.end());
  const EmpiricalRisk twice(data.subset(doubled), loss);
  CHECK(twice.distinct_rows() == 500);
  CHECK(twice(theta) == doctest::Approx(empirical_risk(theta, data, loss)).epsilon(1e-14));
}

TEST_CASE("NaN data reports the offending row") {
  std::vector<double> y{1.0, 2.0, std::numeric_limits<double>::quiet_NaN(), 4.0};
  const GibbsTarget target(Dataset::from_values(y), LossModel::squared_error(), Prior::flat(), 1.0);
  try {
    (void)target.log_density(ParamVector{0.0});
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.row() == 2);
  }

  std::vector<double> cov{1, 0, 1, std::numeric_limits<double>::quiet_NaN(), 1, 2};
  const Dataset reg(cov, 2, {0.0, 1.0, 2.0});
  try {
    (void)empirical_risk(ParamVector{0.0, 1.0}, reg, LossModel::check(0.5, 2));
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.row() == 1);
  }
}

TEST_CASE("gibbs log density") {
  const auto data = Dataset::from_values({-1.0, 0.5, 2.0, 0.25});
  const auto loss = LossModel::squared_error();

  SUBCASE("zero risk under a flat prior gives zero") {
    const GibbsTarget t(Dataset::from_values({1.5, 1.5}), loss, Prior::flat(), 3.0);
    CHECK(t.log_density(ParamVector{1.5}) == 0.0);
  }

  SUBCASE("differences are -omega n (R1 - R2) exactly") {
    const GibbsTarget t(data, loss, Prior::flat(), 0.7);
    const ParamVector a{0.1}, b{1.3};
    const double expected = -0.7 * 4.0 * (empirical_risk(a, data, loss) - empirical_risk(b, data, loss));
    CHECK(t.log_density(a) - t.log_density(b) == doctest::Approx(expected).epsilon(1e-15));
    const auto t2 = t.with_omega(1.4);
    CHECK(t2.log_density(a) - t2.log_density(b) ==
          doctest::Approx(2.0 * (t.log_density(a) - t.log_density(b))).epsilon(1e-14));
  }

  SUBCASE("flat prior plus squared error is an exact quadratic with curvature -2 omega n") {
    const double omega = 0.5;
    const double n = 4.0;
    const GibbsTarget t(data, loss, Prior::flat(), omega);
    const double xbar = (-1.0 + 0.5 + 2.0 + 0.25) / 4.0;
    auto f = [&](double th) { return t.log_density(ParamVector{th}); };
    const double h = 0.1;
    for (double th : {-2.0, -0.3, xbar, 0.9, 3.0}) {
      const double second = (f(th + h) - 2.0 * f(th) + f(th - h)) / (h * h);
      CHECK(second == doctest::Approx(-2.0 * omega * n).epsilon(1e-8));
      const double third =
          (f(th + 2 * h) - 3.0 * f(th + h) + 3.0 * f(th) - f(th - h)) / (h * h * h);
      CHECK(std::abs(third) < 1e-8 * 2.0 * omega * n / h);
    }
    // maximized at the sample mean
    CHECK(f(xbar) > f(xbar + 1e-3));
    CHECK(f(xbar) > f(xbar - 1e-3));
  }

  SUBCASE("non-finite parameters have zero density") {
    const GibbsTarget t(data, loss, Prior::flat(), 1.0);
    CHECK(t.log_density(ParamVector{std::numeric_limits<double>::infinity()}) ==
          -std::numeric_limits<double>::infinity());
  }

  CHECK_THROWS_AS(GibbsTarget(data, loss, Prior::flat(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(GibbsTarget(data, loss, Prior::flat(), -1.0), std::invalid_argument);
  CHECK_THROWS_AS(GibbsTarget(data, loss, Prior::gaussian({0, 0}, {1, 1}), 1.0),
                  std::invalid_argument);
}

TEST_CASE("gaussian prior") {
  CHECK_THROWS_AS(Prior::gaussian({0.0}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Prior::gaussian({0.0}, {-1.0}), std::invalid_argument);
  const auto p = Prior::gaussian({1.0, -1.0}, {2.0, 0.5});
  const double expected = -std::log(2.0) - std::log(0.5) - std::log(2.0 * M_PI) -
                          0.5 * (0.25 + 16.0);
  CHECK(p.log_density(ParamVector{2.0, 1.0}) == doctest::Approx(expected));
  CHECK(Prior::flat().log_density(ParamVector{1e300}) == 0.0);
}

TEST_CASE("check loss is convex along segments") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int seg = 0; seg < 20; ++seg) {
    const std::vector<double> x{1.0, z(rng), z(rng)};
    const Observation o{x, z(rng)};
    const double tau = u(rng);
    const ParamVector a{z(rng), z(rng), z(rng)}, b{z(rng), z(rng), z(rng)};
    ParamVector mid(3);
    for (int k = 0; k < 3; ++k) mid[k] = 0.5 * (a[k] + b[k]);
    CHECK(check_loss(mid, o, tau) <=
          0.5 * (check_loss(a, o, tau) + check_loss(b, o, tau)) + 1e-12);
  }
}

TEST_CASE("check loss is Lipschitz with constant (1 + tau) |x|") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> x{1.0, 3.0 * z(rng)};
    const Observation o{x, 5.0 * z(rng)};
    const double tau = u(rng);
    const ParamVector a{z(rng), z(rng)}, b{z(rng), z(rng)};
    const double dist = std::hypot(a[0] - b[0], a[1] - b[1]);
    const double norm_x = std::hypot(x[0], x[1]);
    CHECK(std::abs(check_loss(a, o, tau) - check_loss(b, o, tau)) <=
          (1.0 + tau) * norm_x * dist + 1e-12);
  }
}

TEST_CASE("misclassification loss only takes values 0 and 2") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> z;
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> x{z(rng), z(rng), z(rng)};
    const double y = z(rng) > 0 ? 1.0 : -1.0;
    const ParamVector theta{z(rng), z(rng), z(rng)};
    const double l = misclassification_loss(theta, Observation{x, y}, i % 3);
    CHECK((l == 0.0 || l == 2.0));
  }
}
