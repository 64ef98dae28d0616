#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gibbs/credible.hpp"
#include "gibbs/model.hpp"
#include "gibbs/sampler.hpp"

namespace gibbs {

/// Settings of the scale calibration loop. kappa_t = kappa0 * t^(-kappa_exponent).
struct GpsConfig {
  double alpha = 0.05;
  std::size_t B = 100;
  std::size_t M = 2000;
  std::optional<std::size_t> burn_in;  // per chain, defaults to M
  double omega_init = 1.0;
  double kappa0 = 1.0;
  double kappa_exponent = 0.75;
  double eps_tol = 0.01;
  std::size_t max_iter = 50;
  double omega_min = 1e-8;
  CoverageMode coverage_mode = CoverageMode::per_coordinate_average();
  // Start each round's chains from the previous round's final states and
  // step scales instead of from the anchor.
  bool warm_start = true;
  // Anchor coverage at 2*theta_hat - mean(bootstrap M-estimates).
  bool bias_correction = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // workers for the B chains of one round; 0 = all cores

  void validate() const;
};

struct GpsIterate {
  std::size_t t = 0;
  double omega = 0.0;  // scale the chains of this round were run at
  double c_hat = 0.0;  // empirical coverage at omega
  double kappa = 0.0;  // gain used for the update after this round
};

struct GpsResult {
  double omega_n = 0.0;
  std::vector<GpsIterate> trace;
  bool converged = false;
  std::size_t iterations = 0;
  ParamVector theta_hat;  // coverage anchor
  std::vector<std::string> warnings;
};

class DegenerateChainsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row indices of B resamples of size n, drawn uniformly with replacement.
std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n, std::size_t B,
                                                        std::uint64_t seed);
std::vector<Dataset> bootstrap_resample(const Dataset& data, std::size_t B, std::uint64_t seed);

struct CoverageEstimate {
  double c_hat = 0.0;
  std::size_t chains_used = 0;
  std::size_t degenerate = 0;
  std::vector<std::string> warnings;
};

/// Empirical coverage over a fixed set of bootstrap datasets. Keeps the
/// compiled risks and, when warm starting, each chain's last state between
/// calls, so repeated evaluation at different scales is cheap.
class CoverageEvaluator {
 public:
  /// `chain` supplies draws, burn-in, adaptation and the base seed. An empty
  /// init means "start at the anchor"; an empty step_scale means "suggest
  /// one from the local curvature".
  CoverageEvaluator(std::span<const Dataset> boot_sets, const LossModel& loss, Prior prior,
                    ParamVector anchor, double alpha, CoverageMode mode, SamplerConfig chain,
                    bool warm_start = false, unsigned threads = 1);

  /// Runs one chain per bootstrap set at `omega`; `round` selects the RNG
  /// streams. Degenerate chains are dropped with a warning; more than 20%
  /// degenerate raises DegenerateChainsError.
  CoverageEstimate evaluate(double omega, std::uint64_t round);

  std::size_t size() const noexcept { return risks_.size(); }
  const ParamVector& anchor() const noexcept { return anchor_; }

 private:
  std::vector<std::shared_ptr<const EmpiricalRisk>> risks_;
  Prior prior_;
  ParamVector anchor_;
  double alpha_;
  CoverageMode mode_;
  SamplerConfig chain_;
  bool warm_start_;
  unsigned threads_;
  std::vector<ParamVector> state_;
  std::vector<ParamVector> step_;
  std::vector<std::vector<double>> chol_;
};

/// Empirical coverage at omega: fraction (by `mode`) of bootstrap posteriors
/// whose equal-tailed intervals contain the anchor.
double empirical_coverage(double omega, std::span<const Dataset> boot_sets,
                          const ParamVector& anchor, double alpha, const LossModel& loss,
                          const Prior& prior, const SamplerConfig& sampler_cfg,
                          const CoverageMode& mode);

double gain(std::size_t t, const GpsConfig& cfg);

/// max(omega_min, omega + kappa_t * (c_hat - (1 - alpha))), t >= 1.
double sa_step(double omega, double c_hat, std::size_t t, const GpsConfig& cfg);

/// True when |c_hat - (1 - alpha)| <= eps_tol, allowing for rounding in c_hat.
bool within_tolerance(double c_hat, const GpsConfig& cfg);

/// The bootstrap sets gps_calibrate draws for (data, cfg.B, cfg.seed).
std::vector<Dataset> gps_bootstrap_sets(const Dataset& data, const GpsConfig& cfg);

/// Full calibration: bootstrap sets drawn once, then alternate coverage
/// evaluation and stochastic-approximation updates until the coverage at the
/// current scale is within eps_tol of 1 - alpha. The returned omega_n is the
/// scale after the final update. Hitting max_iter returns the last iterate
/// with converged = false.
GpsResult gps_calibrate(const Dataset& data, const LossModel& loss, const Prior& prior,
                        const GpsConfig& cfg);

/// Trace dump: `t,omega,c_hat,kappa`.
void write_trace_csv(std::ostream& out, const GpsResult& result);
void write_trace_csv(const std::filesystem::path& path, const GpsResult& result);

}  // namespace gibbs
