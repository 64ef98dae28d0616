#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gibbs/credible.hpp"
#include "gibbs/gps.hpp"
#include "gibbs/model.hpp"

namespace gibbs {

/// n iid N(0, sigma^2) values; squared-error loss, theta* = 0.
struct NormalMeanScenario {
  double sigma = 1.0;
};

/// X ~ N2(mean, cov), Y = 2 Ber(F(X1 - X2)) - 1 with F the N(0, noise_sd^2)
/// cdf. Misclassification loss with j = first covariate; theta* = (0, 1).
struct ClassificationScenario {
  std::array<double, 2> mean{5.0, 5.0};
  std::array<double, 4> cov{2.0, 0.5, 0.5, 2.0};  // row-major 2x2
  double noise_sd = 0.5;
};

/// Y = theta0 + theta1 X + e, X ~ ChiSq(2) - 2, e ~ N(0, error_sd^2); check
/// loss at tau with covariates (1, X).
struct QuantRegScenario {
  double tau = 0.5;
  double theta0 = 2.0;
  double theta1 = 1.0;
  double error_sd = 2.0;
};

struct ScenarioSpec {
  std::variant<NormalMeanScenario, ClassificationScenario, QuantRegScenario> kind;
  std::size_t n = 100;
  std::uint64_t seed = 0;

  void validate() const;
  std::string name() const;
};

struct GeneratedData {
  Dataset data;
  ParamVector theta_star;
};

GeneratedData generate(const ScenarioSpec& spec);
LossModel scenario_loss(const ScenarioSpec& spec);
/// Flat, except N(0, 10^2 I) for classification.
Prior default_prior(const ScenarioSpec& spec);
std::vector<std::string> parameter_names(const ScenarioSpec& spec);

struct ReplicationRecord {
  std::size_t index = 0;
  double omega = 0.0;
  bool converged = true;
  std::size_t gps_iterations = 0;
  std::vector<CredibleInterval> intervals;
  std::vector<bool> covered;
  std::vector<double> posterior_sd;
};

struct StudyReport {
  std::string scenario;
  std::size_t n = 0;
  std::string method;
  std::string prior;
  double alpha = 0.05;
  std::vector<std::string> parameters;
  std::vector<double> coverage;           // per parameter
  std::vector<double> mean_length;        // per parameter
  std::vector<double> mean_posterior_sd;  // per parameter
  double joint_coverage = 0.0;            // all parameters covered at once
  std::vector<double> omega_samples;
  std::size_t replications = 0;           // successful runs aggregated above
  std::size_t failures = 0;
  std::size_t not_converged = 0;
  std::vector<ReplicationRecord> records;
  std::vector<std::string> failure_messages;
};

class StudyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StudyOptions {
  std::optional<Prior> prior;  // default_prior(spec) when empty
  unsigned threads = 1;        // replications run in parallel; 0 = all cores
};

/// Per replication: fresh data, GPS calibration, a final posterior at omega_n
/// on the original data, and containment of theta* by each equal-tailed
/// interval. Uses gps_cfg.alpha, M, burn_in and seed for the final chain.
/// Failed replications are excluded; more than 5% failures throws StudyError.
StudyReport run_coverage_study(const ScenarioSpec& spec, const GpsConfig& gps_cfg,
                               std::size_t replications, const StudyOptions& options = {});

/// As run_coverage_study with calibration replaced by a fixed omega.
StudyReport fixed_omega_study(const ScenarioSpec& spec, double omega, std::size_t replications,
                              const GpsConfig& cfg = {}, const StudyOptions& options = {});

/// Scale matching the Gibbs posterior's asymptotic variance to the
/// M-estimator's sandwich variance for median-type regression with
/// N(0, error_sd^2) errors: f(q_tau) / (tau (1 - tau)), where f is the error
/// density and q_tau its tau-quantile (q_tau = 0 at tau = 1/2).
double asymptotic_omega_oracle(double tau, double error_sd);

double normal_quantile(double p);
double interquartile_range(std::vector<double> values);

/// One row per (scenario, n, parameter).
void write_report_csv(std::ostream& out, std::span<const StudyReport> reports);
void write_report_csv(const std::filesystem::path& path, std::span<const StudyReport> reports);
/// One row per replication: scenario,n,replication,omega,converged.
void write_omega_csv(std::ostream& out, std::span<const StudyReport> reports);
void write_omega_csv(const std::filesystem::path& path, std::span<const StudyReport> reports);

}  // namespace gibbs
