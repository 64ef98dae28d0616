#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "gibbs/experiments.hpp"
#include "gibbs/mestimator.hpp"
#include "gibbs/sampler.hpp"

using namespace gibbs;

namespace {

Dataset normal_sample(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  return Dataset::from_values(v);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("conjugate normal-mean target") {
  const auto data = normal_sample(100, 42);
  const double xbar = mean_of(std::vector<double>(data.responses().begin(), data.responses().end()));
  const double omega = 0.5;
  const GibbsTarget target(data, LossModel::squared_error(), Prior::flat(), omega);

  SamplerConfig cfg;
  cfg.draws = 10000;
  cfg.init = {0.0};
  cfg.step_scale = {0.1};
  cfg.seed = 7;
  const auto s = mh_sample(target, cfg);
  REQUIRE(s.size() == 10000);
  CHECK_FALSE(s.degenerate);

  const auto col = s.column(0);
  const double sd = std::sqrt(var_of(col));
  const auto ess = effective_sample_size(col);
  CHECK(std::abs(mean_of(col) - xbar) <= 4.0 * sd / std::sqrt(ess.ess));
  const double exact_var = 1.0 / (2.0 * omega * 100.0);
  CHECK(std::abs(var_of(col) / exact_var - 1.0) <= 0.15);
  for (double v : s.draws) CHECK(std::isfinite(v));
  CHECK(s.accept_rate >= 0.0);
  CHECK(s.accept_rate <= 1.0);
}

TEST_CASE("zero-size proposals keep the initial state") {
  const GibbsTarget target(normal_sample(10, 1), LossModel::squared_error(), Prior::flat(), 1.0);
  SamplerConfig cfg;
  cfg.draws = 1;
  cfg.burn_in = 0;
  cfg.init = {0.3};
  cfg.step_scale = {1e-300};
  const auto s = mh_sample(target, cfg);
  REQUIRE(s.size() == 1);
  CHECK(s.draw(0)[0] == 0.3);
}

TEST_CASE("sampling is deterministic given the seed") {
  const GibbsTarget target(normal_sample(50, 2), LossModel::squared_error(), Prior::flat(), 1.0);
  SamplerConfig cfg;
  cfg.draws = 500;
  cfg.init = {0.0};
  cfg.step_scale = {0.2};
  cfg.seed = 99;
  const auto a = mh_sample(target, cfg);
  const auto b = mh_sample(target, cfg);
  CHECK(a.draws == b.draws);
  CHECK(a.log_density == b.log_density);
  CHECK(a.final_step_scale == b.final_step_scale);
  cfg.seed = 100;
  CHECK(mh_sample(target, cfg).draws != a.draws);
}

TEST_CASE("adaptation is confined to burn-in") {
  const GibbsTarget target(normal_sample(50, 3), LossModel::squared_error(), Prior::flat(), 1.0);
  SamplerConfig cfg;
  cfg.draws = 1000;
  cfg.burn_in = 0;
  cfg.init = {0.0};
  cfg.step_scale = {5.0};
  const auto s = mh_sample(target, cfg);
  CHECK(s.final_step_scale == cfg.step_scale);

  cfg.burn_in = 1000;
  const auto t = mh_sample(target, cfg);
  CHECK(t.final_step_scale[0] < 5.0);
  cfg.adapt = false;
  CHECK(mh_sample(target, cfg).final_step_scale == cfg.step_scale);
}

TEST_CASE("invalid sampler input") {
  const GibbsTarget target(normal_sample(5, 4), LossModel::squared_error(),
                           Prior::flat(), 1.0);
  SamplerConfig cfg;
  cfg.init = {0.0};
  cfg.step_scale = {0.0};
  CHECK_THROWS_AS(mh_sample(target, cfg), std::invalid_argument);
  cfg.step_scale = {1.0};
  cfg.target_accept = 0.7;
  CHECK_THROWS_AS(mh_sample(target, cfg), std::invalid_argument);
  cfg.target_accept = 0.3;
  cfg.init = {std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(mh_sample(target, cfg), std::invalid_argument);
  cfg.init = {0.0, 0.0};
  CHECK_THROWS_AS(mh_sample(target, cfg), std::invalid_argument);
}

TEST_CASE("a chain that never moves is flagged degenerate") {
  // Huge omega and a wide proposal: practically every move is rejected.
  const GibbsTarget target(normal_sample(100, 5), LossModel::squared_error(), Prior::flat(), 1e12);
  const double xbar = mean_of(std::vector<double>(target.risk().data().responses().begin(),
                                                  target.risk().data().responses().end()));
  SamplerConfig cfg;
  cfg.draws = 20;
  cfg.burn_in = 20;
  cfg.adapt = false;
  cfg.init = {xbar};
  cfg.step_scale = {10.0};
  const auto s = mh_sample(target, cfg);
  CHECK(s.degenerate);
  CHECK_FALSE(s.warning.empty());
  CHECK(s.accept_rate == 0.0);
}

TEST_CASE("effective sample size") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;

  SUBCASE("iid draws") {
    std::vector<double> v(10000);
    for (auto& x : v) x = z(rng);
    const auto r = effective_sample_size(v);
    CHECK_FALSE(r.degenerate);
    CHECK(r.ess >= 8000);
    CHECK(r.ess <= 12000);
  }
  SUBCASE("constant chain") {
    const auto r = effective_sample_size(std::vector<double>(50, 1.25));
    CHECK(r.ess == 0.0);
    CHECK(r.degenerate);
  }
  SUBCASE("AR(1) with rho = 0.5") {
    const double rho = 0.5;
    std::vector<double> v(100000);
    double x = z(rng) / std::sqrt(1 - rho * rho);
    for (auto& e : v) {
      x = rho * x + z(rng);
      e = x;
    }
    const auto r = effective_sample_size(v);
    const double ratio = r.ess / static_cast<double>(v.size());
    CHECK(std::abs(ratio / ((1 - rho) / (1 + rho)) - 1.0) <= 0.2);
  }
  CHECK_THROWS_AS(effective_sample_size(std::vector<double>(9, 0.0)), std::invalid_argument);
}

TEST_CASE("adapted acceptance rates for the bundled losses") {
  for (int which = 0; which < 3; ++which) {
    ScenarioSpec spec;
    spec.n = 200;
    spec.seed = 21 + which;
    if (which == 0) spec.kind = NormalMeanScenario{};
    if (which == 1) spec.kind = QuantRegScenario{};
    if (which == 2) spec.kind = ClassificationScenario{};
    const auto gen = generate(spec);
    const auto loss = scenario_loss(spec);
    const auto est = minimize_risk(gen.data, loss);
    const GibbsTarget target(gen.data, loss, default_prior(spec), 1.0);
    SamplerConfig cfg;
    cfg.draws = 4000;
    cfg.init = est.theta_hat;
    cfg.step_scale = suggest_step_scale(target, est.theta_hat);
    cfg.seed = 5;
    const auto s = mh_sample(target, cfg);
    INFO("scenario " << spec.name());
    CHECK(std::abs(s.accept_rate - cfg.target_accept) <= 0.15);
    for (double v : s.draws) CHECK(std::isfinite(v));
  }
}

TEST_CASE("suggested steps follow the posterior scale") {
  const auto data = normal_sample(100, 8);
  const GibbsTarget target(data, LossModel::squared_error(), Prior::flat(), 0.5);
  const double xbar = mean_of(std::vector<double>(data.responses().begin(), data.responses().end()));
  // log density drops by 1/2 at one posterior sd for a Gaussian
  const double sd = std::sqrt(1.0 / (2.0 * 0.5 * 100.0));
  const auto step = suggest_step_scale(target, std::vector<double>{xbar + 0.3});
  CHECK(step[0] == doctest::Approx(2.38 * sd).epsilon(0.01));
}

TEST_CASE("chain csv") {
  PosteriorSample s;
  s.param_dim = 2;
  s.draws = {1.0, 2.0, 3.0, 4.5};
  s.log_density = {-1.0, -0.5};
  std::ostringstream out;
  write_chain_csv(out, s);
  CHECK(out.str() == "iter,theta_0,theta_1,log_density\n0,1,2,-1\n1,3,4.5,-0.5\n");
}
