#include "gibbs/gps.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <random>

#include "csv_util.hpp"
#include "gibbs/mestimator.hpp"
#include "gibbs/parallel.hpp"
#include "gibbs/random.hpp"

namespace gibbs {
namespace {

// Stream labels under the master seed.
constexpr std::uint64_t kBootstrapStream = 1;
constexpr std::uint64_t kChainStream = 2;
constexpr std::uint64_t kOptimizerStream = 3;

constexpr double kMaxDegenerateFraction = 0.2;

}  // namespace

void GpsConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("gps: alpha must lie in (0, 0.5)");
  if (B == 0) throw std::invalid_argument("gps: B must be positive");
  if (M < 20) throw std::invalid_argument("gps: M must be at least 20");
  if (!(kappa0 > 0.0)) throw std::invalid_argument("gps: kappa0 must be positive");
  if (!(kappa_exponent > 0.5 && kappa_exponent <= 1.0)) {
    throw std::invalid_argument("gps: kappa_exponent must lie in (1/2, 1]");
  }
  if (!(eps_tol > 0.0)) throw std::invalid_argument("gps: eps_tol must be positive");
  if (max_iter == 0) throw std::invalid_argument("gps: max_iter must be positive");
  if (!(omega_min > 0.0)) throw std::invalid_argument("gps: omega_min must be positive");
  if (!(omega_init >= omega_min) || !std::isfinite(omega_init)) {
    throw std::invalid_argument("gps: omega_init must be finite and at least omega_min");
  }
}

std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n, std::size_t B,
                                                        std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("bootstrap: empty dataset");
  if (B == 0) throw std::invalid_argument("bootstrap: B must be positive");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::vector<std::size_t>> out(B, std::vector<std::size_t>(n));
  for (auto& idx : out) {
    for (auto& i : idx) i = pick(rng);
  }
  return out;
}

std::vector<Dataset> bootstrap_resample(const Dataset& data, std::size_t B, std::uint64_t seed) {
  std::vector<Dataset> out;
  out.reserve(B);
  for (const auto& idx : bootstrap_indices(data.size(), B, seed)) out.push_back(data.subset(idx));
  return out;
}

// ---------------------------------------------------------------------------

CoverageEvaluator::CoverageEvaluator(std::span<const Dataset> boot_sets, const LossModel& loss,
                                     Prior prior, ParamVector anchor, double alpha,
                                     CoverageMode mode, SamplerConfig chain, bool warm_start,
                                     unsigned threads)
    : prior_(std::move(prior)),
      anchor_(std::move(anchor)),
      alpha_(alpha),
      mode_(mode),
      chain_(std::move(chain)),
      warm_start_(warm_start),
      threads_(threads) {
  if (boot_sets.empty()) throw std::invalid_argument("empirical coverage: no bootstrap sets");
  if (anchor_.size() != loss.param_dim()) {
    throw std::invalid_argument("empirical coverage: anchor has the wrong dimension");
  }
  if (!(alpha_ > 0.0 && alpha_ < 0.5)) {
    throw std::invalid_argument("empirical coverage: alpha must lie in (0, 0.5)");
  }
  if (chain_.draws < 20) throw std::invalid_argument("empirical coverage: need at least 20 draws");
  risks_.reserve(boot_sets.size());
  for (const auto& d : boot_sets) risks_.push_back(std::make_shared<const EmpiricalRisk>(d, loss));
  const ParamVector& start = chain_.init.empty() ? anchor_ : chain_.init;
  state_.assign(risks_.size(), start);
  step_.assign(risks_.size(), chain_.step_scale);
  chol_.assign(risks_.size(), chain_.proposal_cholesky);
}

CoverageEstimate CoverageEvaluator::evaluate(double omega, std::uint64_t round) {
  const std::size_t B = risks_.size();
  std::vector<double> event(B, 0.0);
  std::vector<PosteriorSample> samples(B);

  parallel_for(B, threads_, [&](std::size_t b) {
    const GibbsTarget target(risks_[b], prior_, omega);
    SamplerConfig cfg = chain_;
    cfg.init = state_[b];
    cfg.step_scale = step_[b].empty() ? suggest_step_scale(target, cfg.init) : step_[b];
    cfg.proposal_cholesky = chol_[b];
    cfg.seed = derive_seed(chain_.seed, {kChainStream, round, b});
    samples[b] = mh_sample(target, cfg);
    if (!samples[b].degenerate) {
      const auto intervals = marginal_intervals(samples[b], alpha_);
      event[b] = coverage_event(intervals, anchor_, mode_);
    }
  });

  CoverageEstimate est;
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    if (samples[b].degenerate) {
      ++est.degenerate;
      est.warnings.push_back("bootstrap set " + std::to_string(b) + ": " + samples[b].warning);
      continue;
    }
    ++est.chains_used;
    total += event[b];
    if (warm_start_) {
      state_[b] = samples[b].final_state;
      step_[b] = samples[b].final_step_scale;
      chol_[b] = samples[b].final_proposal_cholesky;
    }
  }
  if (static_cast<double>(est.degenerate) > kMaxDegenerateFraction * static_cast<double>(B)) {
    throw DegenerateChainsError(std::to_string(est.degenerate) + " of " + std::to_string(B) +
                                " bootstrap chains are degenerate at omega = " +
                                std::to_string(omega));
  }
  est.c_hat = total / static_cast<double>(est.chains_used);
  return est;
}

double empirical_coverage(double omega, std::span<const Dataset> boot_sets,
                          const ParamVector& anchor, double alpha, const LossModel& loss,
                          const Prior& prior, const SamplerConfig& sampler_cfg,
                          const CoverageMode& mode) {
  CoverageEvaluator evaluator(boot_sets, loss, prior, anchor, alpha, mode, sampler_cfg);
  return evaluator.evaluate(omega, 0).c_hat;
}

// ---------------------------------------------------------------------------

double gain(std::size_t t, const GpsConfig& cfg) {
  if (t == 0) throw std::invalid_argument("gain: t must be at least 1");
  return cfg.kappa0 * std::pow(static_cast<double>(t), -cfg.kappa_exponent);
}

double sa_step(double omega, double c_hat, std::size_t t, const GpsConfig& cfg) {
  return std::max(cfg.omega_min, omega + gain(t, cfg) * (c_hat - (1.0 - cfg.alpha)));
}

bool within_tolerance(double c_hat, const GpsConfig& cfg) {
  // c_hat is a ratio of small integers, so e.g. 0.96 - 0.95 may round above 0.01.
  return std::abs(c_hat - (1.0 - cfg.alpha)) <= cfg.eps_tol + 1e-12;
}

std::vector<Dataset> gps_bootstrap_sets(const Dataset& data, const GpsConfig& cfg) {
  return bootstrap_resample(data, cfg.B, derive_seed(cfg.seed, {kBootstrapStream}));
}

GpsResult gps_calibrate(const Dataset& data, const LossModel& loss, const Prior& prior,
                        const GpsConfig& cfg) {
  cfg.validate();
  const EmpiricalRisk risk(data, loss);

  OptimizerConfig opt;
  opt.seed = derive_seed(cfg.seed, {kOptimizerStream});
  const MEstimate estimate = minimize_risk(risk, opt);

  GpsResult result;
  result.theta_hat = estimate.theta_hat;

  const auto boot_sets = gps_bootstrap_sets(data, cfg);

  if (cfg.bias_correction) {
    std::vector<ParamVector> boot_estimates(boot_sets.size());
    parallel_for(boot_sets.size(), cfg.threads, [&](std::size_t b) {
      OptimizerConfig o = opt;
      o.seed = derive_seed(cfg.seed, {kOptimizerStream, b + 1});
      boot_estimates[b] = minimize_risk(boot_sets[b], loss, o).theta_hat;
    });
    result.theta_hat = bias_corrected_estimate(estimate.theta_hat, boot_estimates);
  }

  SamplerConfig chain;
  chain.draws = cfg.M;
  chain.burn_in = cfg.burn_in;
  chain.seed = cfg.seed;
  CoverageEvaluator evaluator(boot_sets, loss, prior, result.theta_hat, cfg.alpha,
                              cfg.coverage_mode, chain, cfg.warm_start, cfg.threads);

  double omega = cfg.omega_init;
  for (std::size_t t = 0; t < cfg.max_iter; ++t) {
    auto est = evaluator.evaluate(omega, t);
    for (auto& w : est.warnings) result.warnings.push_back(std::move(w));
    const double kappa = gain(t + 1, cfg);
    const double next = sa_step(omega, est.c_hat, t + 1, cfg);
    result.trace.push_back({t, omega, est.c_hat, kappa});
    result.iterations = t + 1;
    omega = next;
    if (within_tolerance(est.c_hat, cfg)) {
      result.converged = true;
      break;
    }
  }
  result.omega_n = omega;
  return result;
}

void write_trace_csv(std::ostream& out, const GpsResult& result) {
  out << "t,omega,c_hat,kappa\n";
  for (const auto& it : result.trace) {
    out << it.t << ',' << csv::format_double(it.omega) << ',' << csv::format_double(it.c_hat)
        << ',' << csv::format_double(it.kappa) << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const GpsResult& result) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open " + path.string() + " for writing");
  write_trace_csv(out, result);
}

}  // namespace gibbs
