#include "gibbs/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "csv_util.hpp"
#include "gibbs/mestimator.hpp"
#include "gibbs/parallel.hpp"
#include "gibbs/random.hpp"

namespace gibbs {
namespace {

constexpr std::uint64_t kDataStream = 11;
constexpr std::uint64_t kGpsStream = 12;
constexpr std::uint64_t kFinalChainStream = 13;
constexpr std::uint64_t kOptimizerStream = 14;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double sample_sd(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct ScaleChoice {
  double omega;
  bool converged;
  std::size_t iterations;
};

template <class ChooseScale>
StudyReport run_study(const ScenarioSpec& spec, const GpsConfig& cfg, std::size_t replications,
                      const StudyOptions& options, std::string method, ChooseScale choose) {
  spec.validate();
  cfg.validate();
  if (replications == 0) throw std::invalid_argument("study: replications must be positive");
  const LossModel loss = scenario_loss(spec);
  const Prior prior = options.prior.value_or(default_prior(spec));
  const std::size_t p = loss.param_dim();

  struct Outcome {
    std::optional<ReplicationRecord> record;
    std::string error;
  };
  std::vector<Outcome> outcomes(replications);

  parallel_for(replications, options.threads, [&](std::size_t r) {
    try {
      ScenarioSpec rep_spec = spec;
      rep_spec.seed = derive_seed(spec.seed, {kDataStream, r});
      const GeneratedData gen = generate(rep_spec);
      const auto risk = std::make_shared<const EmpiricalRisk>(gen.data, loss);

      OptimizerConfig opt;
      opt.seed = derive_seed(cfg.seed, {kOptimizerStream, r});
      const ParamVector theta_hat = minimize_risk(*risk, opt).theta_hat;

      const ScaleChoice scale = choose(gen.data, loss, prior, r);

      const GibbsTarget target(risk, prior, scale.omega);
      SamplerConfig chain;
      chain.draws = cfg.M;
      chain.burn_in = cfg.burn_in;
      chain.init = theta_hat;
      chain.step_scale = suggest_step_scale(target, theta_hat);
      chain.seed = derive_seed(cfg.seed, {kFinalChainStream, r});
      const PosteriorSample sample = mh_sample(target, chain);
      if (sample.degenerate) throw std::runtime_error(sample.warning);

      ReplicationRecord rec;
      rec.index = r;
      rec.omega = scale.omega;
      rec.converged = scale.converged;
      rec.gps_iterations = scale.iterations;
      rec.intervals = marginal_intervals(sample, cfg.alpha);
      for (std::size_t k = 0; k < p; ++k) {
        rec.covered.push_back(rec.intervals[k].contains(gen.theta_star[k]));
        rec.posterior_sd.push_back(sample_sd(sample.column(k)));
      }
      outcomes[r].record = std::move(rec);
    } catch (const std::exception& e) {
      outcomes[r].error = "replication " + std::to_string(r) + ": " + e.what();
    }
  });

  StudyReport report;
  report.scenario = spec.name();
  report.n = spec.n;
  report.method = std::move(method);
  report.prior = prior.describe();
  report.alpha = cfg.alpha;
  report.parameters = parameter_names(spec);
  report.coverage.assign(p, 0.0);
  report.mean_length.assign(p, 0.0);
  report.mean_posterior_sd.assign(p, 0.0);
  std::size_t joint = 0;
  for (auto& o : outcomes) {
    if (!o.record) {
      ++report.failures;
      report.failure_messages.push_back(std::move(o.error));
      continue;
    }
    const auto& rec = *o.record;
    bool all = true;
    for (std::size_t k = 0; k < p; ++k) {
      report.coverage[k] += rec.covered[k];
      report.mean_length[k] += rec.intervals[k].length();
      report.mean_posterior_sd[k] += rec.posterior_sd[k];
      all = all && rec.covered[k];
    }
    joint += all;
    report.not_converged += !rec.converged;
    report.omega_samples.push_back(rec.omega);
    report.records.push_back(std::move(*o.record));
  }
  report.replications = report.records.size();
  if (report.failures * 20 > replications || report.replications == 0) {
    std::ostringstream msg;
    msg << report.failures << " of " << replications << " replications failed";
    if (!report.failure_messages.empty()) msg << "; first: " << report.failure_messages.front();
    throw StudyError(msg.str());
  }
  const double reps = static_cast<double>(report.replications);
  for (std::size_t k = 0; k < p; ++k) {
    report.coverage[k] /= reps;
    report.mean_length[k] /= reps;
    report.mean_posterior_sd[k] /= reps;
  }
  report.joint_coverage = static_cast<double>(joint) / reps;
  return report;
}

}  // namespace

void ScenarioSpec::validate() const {
  if (n == 0) throw std::invalid_argument("scenario: n must be positive");
  std::visit(overloaded{
                 [](const NormalMeanScenario& s) {
                   if (!(s.sigma > 0.0)) throw std::invalid_argument("scenario: sigma must be positive");
                 },
                 [](const ClassificationScenario& s) {
                   if (!(s.noise_sd > 0.0)) {
                     throw std::invalid_argument("scenario: noise_sd must be positive");
                   }
                   const auto& c = s.cov;
                   if (c[1] != c[2] || !(c[0] > 0.0) || !(c[0] * c[3] - c[1] * c[2] > 0.0)) {
                     throw std::invalid_argument(
                         "scenario: covariance must be symmetric positive definite");
                   }
                 },
                 [](const QuantRegScenario& s) {
                   if (!(s.tau > 0.0 && s.tau < 1.0)) {
                     throw std::invalid_argument("scenario: tau must lie in (0, 1)");
                   }
                   if (!(s.error_sd > 0.0)) {
                     throw std::invalid_argument("scenario: error_sd must be positive");
                   }
                 },
             },
             kind);
}

std::string ScenarioSpec::name() const {
  return std::visit(overloaded{
                        [](const NormalMeanScenario&) { return std::string("normal_mean"); },
                        [](const ClassificationScenario&) { return std::string("classification"); },
                        [](const QuantRegScenario&) { return std::string("quantreg"); },
                    },
                    kind);
}

GeneratedData generate(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = spec.n;

  return std::visit(
      overloaded{
          [&](const NormalMeanScenario& s) {
            std::vector<double> y(n);
            for (auto& v : y) v = s.sigma * normal(rng);
            return GeneratedData{Dataset::from_values(std::move(y)), {0.0}};
          },
          [&](const ClassificationScenario& s) {
            const double l11 = std::sqrt(s.cov[0]);
            const double l21 = s.cov[2] / l11;
            const double l22 = std::sqrt(s.cov[3] - l21 * l21);
            std::uniform_real_distribution<double> uniform(0.0, 1.0);
            std::vector<double> x(2 * n);
            std::vector<double> y(n);
            for (std::size_t i = 0; i < n; ++i) {
              const double z1 = normal(rng);
              const double z2 = normal(rng);
              const double x1 = s.mean[0] + l11 * z1;
              const double x2 = s.mean[1] + l21 * z1 + l22 * z2;
              x[2 * i] = x1;
              x[2 * i + 1] = x2;
              y[i] = uniform(rng) < normal_cdf((x1 - x2) / s.noise_sd) ? 1.0 : -1.0;
            }
            return GeneratedData{Dataset(std::move(x), 2, std::move(y), ResponseKind::label),
                                 {0.0, 1.0}};
          },
          [&](const QuantRegScenario& s) {
            std::chi_squared_distribution<double> chisq(2.0);
            std::vector<double> x(2 * n);
            std::vector<double> y(n);
            for (std::size_t i = 0; i < n; ++i) {
              const double xi = chisq(rng) - 2.0;
              x[2 * i] = 1.0;
              x[2 * i + 1] = xi;
              y[i] = s.theta0 + s.theta1 * xi + s.error_sd * normal(rng);
            }
            const double shift = s.tau == 0.5 ? 0.0 : s.error_sd * normal_quantile(s.tau);
            return GeneratedData{Dataset(std::move(x), 2, std::move(y)),
                                 {s.theta0 + shift, s.theta1}};
          },
      },
      spec.kind);
}

LossModel scenario_loss(const ScenarioSpec& spec) {
  return std::visit(overloaded{
                        [](const NormalMeanScenario&) { return LossModel::squared_error(); },
                        [](const ClassificationScenario&) { return LossModel::misclassification(0, 2); },
                        [](const QuantRegScenario& s) { return LossModel::check(s.tau, 2); },
                    },
                    spec.kind);
}

Prior default_prior(const ScenarioSpec& spec) {
  if (std::holds_alternative<ClassificationScenario>(spec.kind)) {
    return Prior::gaussian({0.0, 0.0}, {10.0, 10.0});
  }
  return Prior::flat();
}

std::vector<std::string> parameter_names(const ScenarioSpec& spec) {
  if (std::holds_alternative<NormalMeanScenario>(spec.kind)) return {"theta_0"};
  return {"theta_0", "theta_1"};
}

StudyReport run_coverage_study(const ScenarioSpec& spec, const GpsConfig& gps_cfg,
                               std::size_t replications, const StudyOptions& options) {
  return run_study(spec, gps_cfg, replications, options, "gps",
                   [&](const Dataset& data, const LossModel& loss, const Prior& prior,
                       std::size_t r) {
                     GpsConfig cfg = gps_cfg;
                     cfg.seed = derive_seed(gps_cfg.seed, {kGpsStream, r});
                     if (options.threads != 1) cfg.threads = 1;
                     const GpsResult res = gps_calibrate(data, loss, prior, cfg);
                     return ScaleChoice{res.omega_n, res.converged, res.iterations};
                   });
}

StudyReport fixed_omega_study(const ScenarioSpec& spec, double omega, std::size_t replications,
                              const GpsConfig& cfg, const StudyOptions& options) {
  if (!(omega > 0.0) || !std::isfinite(omega)) {
    throw std::invalid_argument("fixed_omega_study: omega must be positive");
  }
  std::ostringstream method;
  method << "fixed(omega=" << omega << ")";
  return run_study(spec, cfg, replications, options, method.str(),
                   [omega](const Dataset&, const LossModel&, const Prior&, std::size_t) {
                     return ScaleChoice{omega, true, 0};
                   });
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double asymptotic_omega_oracle(double tau, double error_sd) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("oracle: tau must lie in (0, 1)");
  if (!(error_sd > 0.0)) throw std::invalid_argument("oracle: error_sd must be positive");
  const double q = tau == 0.5 ? 0.0 : normal_quantile(tau);
  const double density = std::exp(-0.5 * q * q) / (error_sd * std::sqrt(2.0 * std::numbers::pi));
  return density / (tau * (1.0 - tau));
}

double interquartile_range(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("interquartile_range: no values");
  std::sort(values.begin(), values.end());
  return interpolated_quantile(values, 0.75) - interpolated_quantile(values, 0.25);
}

void write_report_csv(std::ostream& out, std::span<const StudyReport> reports) {
  out << "scenario,n,method,prior,alpha,parameter,coverage,mean_length,mean_posterior_sd,"
         "joint_coverage,mean_omega,replications,failures,not_converged\n";
  for (const auto& r : reports) {
    double mean_omega = 0.0;
    for (double w : r.omega_samples) mean_omega += w;
    if (!r.omega_samples.empty()) mean_omega /= static_cast<double>(r.omega_samples.size());
    for (std::size_t k = 0; k < r.parameters.size(); ++k) {
      out << r.scenario << ',' << r.n << ',' << r.method << ',' << r.prior << ','
          << csv::format_double(r.alpha) << ',' << r.parameters[k] << ','
          << csv::format_double(r.coverage[k]) << ',' << csv::format_double(r.mean_length[k])
          << ',' << csv::format_double(r.mean_posterior_sd[k]) << ','
          << csv::format_double(r.joint_coverage) << ',' << csv::format_double(mean_omega) << ','
          << r.replications << ',' << r.failures << ',' << r.not_converged << '\n';
    }
  }
}

void write_report_csv(const std::filesystem::path& path, std::span<const StudyReport> reports) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open " + path.string() + " for writing");
  write_report_csv(out, reports);
}

void write_omega_csv(std::ostream& out, std::span<const StudyReport> reports) {
  out << "scenario,n,replication,omega,converged\n";
  for (const auto& r : reports) {
    for (const auto& rec : r.records) {
      out << r.scenario << ',' << r.n << ',' << rec.index << ',' << csv::format_double(rec.omega)
          << ',' << (rec.converged ? 1 : 0) << '\n';
    }
  }
}

void write_omega_csv(const std::filesystem::path& path, std::span<const StudyReport> reports) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open " + path.string() + " for writing");
  write_omega_csv(out, reports);
}

}  // namespace gibbs
