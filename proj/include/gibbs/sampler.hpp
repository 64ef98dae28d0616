#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gibbs/model.hpp"

namespace gibbs {

struct SamplerConfig {
  std::size_t draws = 2000;               // retained draws M
  std::optional<std::size_t> burn_in;     // defaults to `draws`
  ParamVector init;
  ParamVector step_scale;                 // per-coordinate proposal sd
  // Row-major lower Cholesky factor of the proposal correlation; empty means
  // independent coordinates.
  std::vector<double> proposal_cholesky;
  bool adapt = true;
  bool adapt_correlation = true;          // learn proposal correlation in burn-in
  double target_accept = 0.3;
  std::uint64_t seed = 0;

  std::size_t effective_burn_in() const noexcept { return burn_in.value_or(draws); }
  void validate(std::size_t param_dim) const;
};

// Burn-in adaptation: every kAdaptBatch iterations the step scales are
// multiplied by exp(+-kAdaptFactor) toward the target acceptance rate. With
// adapt_correlation and p >= 2, at 1/2 and 3/4 of burn-in the proposal is
// refitted to the states visited since 1/4 of burn-in: step_k becomes
// 2.38/sqrt(p) times their sd and the correlation their (slightly shrunk)
// correlation. Burn-ins shorter than kMinCorrelationBurnIn skip this.
inline constexpr std::size_t kAdaptBatch = 50;
inline constexpr double kAdaptFactor = 0.05;
inline constexpr double kMinStepScale = 1e-6;
inline constexpr std::size_t kMinCorrelationBurnIn = 400;

struct PosteriorSample {
  std::size_t param_dim = 0;
  std::vector<double> draws;        // row-major, size() x param_dim
  std::vector<double> log_density;  // one per retained draw
  double accept_rate = 0.0;         // over retained draws
  double burn_in_accept_rate = 0.0;
  ParamVector final_state;
  ParamVector final_step_scale;
  std::vector<double> final_proposal_cholesky;
  bool degenerate = false;
  std::string warning;

  std::size_t size() const noexcept { return log_density.size(); }
  std::span<const double> draw(std::size_t i) const {
    return std::span<const double>(draws).subspan(i * param_dim, param_dim);
  }
  std::vector<double> column(std::size_t k) const;
};

/// Random-walk Metropolis-Hastings with Gaussian proposals
/// theta + step_scale * (L z). Step scales and L adapt only during burn-in and
/// are frozen for the retained draws. Deterministic given cfg.seed.
PosteriorSample mh_sample(const GibbsTarget& target, const SamplerConfig& cfg);

/// Proposal scales from the profile of the log density around `center`: per
/// coordinate, the distance h at which the log density drops by 8, read as
/// four standard deviations, so the scale is 2.38/sqrt(p) * h/4.
ParamVector suggest_step_scale(const GibbsTarget& target, std::span<const double> center);

struct EssResult {
  double ess = 0.0;
  bool degenerate = false;  // constant chain
};

/// Effective sample size with Geyer's initial positive sequence truncation.
/// Requires at least 10 values; result lies in [0, length].
EssResult effective_sample_size(std::span<const double> chain);

/// Chain dump: `iter,theta_0..theta_p,log_density`, one row per draw.
void write_chain_csv(std::ostream& out, const PosteriorSample& sample);
void write_chain_csv(const std::filesystem::path& path, const PosteriorSample& sample);

}  // namespace gibbs
