#include "gibbs/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "csv_util.hpp"
#include "gibbs/random.hpp"

namespace gibbs {

void SamplerConfig::validate(std::size_t param_dim) const {
  if (draws == 0) throw std::invalid_argument("sampler: draws must be positive");
  if (init.size() != param_dim) {
    throw std::invalid_argument("sampler: init has dimension " + std::to_string(init.size()) +
                                ", target expects " + std::to_string(param_dim));
  }
  if (step_scale.size() != param_dim) {
    throw std::invalid_argument("sampler: step_scale has the wrong dimension");
  }
  for (double s : step_scale) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("sampler: step_scale entries must be positive and finite");
    }
  }
  for (double v : init) {
    if (!std::isfinite(v)) throw std::invalid_argument("sampler: init must be finite");
  }
  if (!proposal_cholesky.empty()) {
    if (proposal_cholesky.size() != param_dim * param_dim) {
      throw std::invalid_argument("sampler: proposal_cholesky has the wrong size");
    }
    for (std::size_t k = 0; k < param_dim; ++k) {
      if (!(proposal_cholesky[k * param_dim + k] > 0.0)) {
        throw std::invalid_argument("sampler: proposal_cholesky needs a positive diagonal");
      }
    }
    for (double v : proposal_cholesky) {
      if (!std::isfinite(v)) throw std::invalid_argument("sampler: proposal_cholesky must be finite");
    }
  }
  if (!(target_accept > 0.1 && target_accept < 0.6)) {
    throw std::invalid_argument("sampler: target_accept must lie in (0.1, 0.6)");
  }
}

std::vector<double> PosteriorSample::column(std::size_t k) const {
  if (k >= param_dim) throw std::out_of_range("PosteriorSample::column");
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = draws[i * param_dim + k];
  return out;
}

namespace {

constexpr double kCorrelationShrink = 0.05;

// Running mean and scatter of visited states.
struct Moments {
  explicit Moments(std::size_t p) : mean(Eigen::VectorXd::Zero(p)), scatter(Eigen::MatrixXd::Zero(p, p)) {}
  void add(const ParamVector& x) {
    ++count;
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd delta = v - mean;
    mean += delta / static_cast<double>(count);
    scatter += delta * (v - mean).transpose();
  }
  std::size_t count = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;
};

// New step scales and correlation factor from the visited states; false if
// they carry no usable information (e.g. a coordinate never moved).
bool refit_proposal(const Moments& m, ParamVector& step, std::vector<double>& chol) {
  const auto p = static_cast<Eigen::Index>(step.size());
  if (m.count < 2) return false;
  const Eigen::MatrixXd cov = m.scatter / static_cast<double>(m.count - 1);
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  if (!sd.allFinite() || sd.minCoeff() <= 0.0) return false;
  Eigen::MatrixXd corr = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
  corr = (1.0 - kCorrelationShrink) * corr +
         kCorrelationShrink * Eigen::MatrixXd::Identity(p, p);
  const Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::MatrixXd L = llt.matrixL();
  if (!L.allFinite()) return false;
  chol.assign(static_cast<std::size_t>(p * p), 0.0);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) chol[static_cast<std::size_t>(i * p + j)] = L(i, j);
  }
  const double factor = 2.38 / std::sqrt(static_cast<double>(p));
  for (Eigen::Index k = 0; k < p; ++k) {
    step[static_cast<std::size_t>(k)] = std::max(kMinStepScale, factor * sd(k));
  }
  return true;
}

}  // namespace

PosteriorSample mh_sample(const GibbsTarget& target, const SamplerConfig& cfg) {
  const std::size_t p = target.param_dim();
  cfg.validate(p);

  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  ParamVector theta = cfg.init;
  double lp = target.log_density(theta);
  if (!std::isfinite(lp)) {
    throw std::invalid_argument("mh_sample: log density at the initial state is not finite");
  }
  ParamVector step = cfg.step_scale;
  std::vector<double> chol = cfg.proposal_cholesky;
  ParamVector proposal(p);
  ParamVector z(p);

  const std::size_t burn = cfg.effective_burn_in();
  const std::size_t total = burn + cfg.draws;
  const bool learn_corr = cfg.adapt && cfg.adapt_correlation && p >= 2 &&
                          burn >= kMinCorrelationBurnIn;
  Moments moments(learn_corr ? p : 0);

  PosteriorSample out;
  out.param_dim = p;
  out.draws.reserve(cfg.draws * p);
  out.log_density.reserve(cfg.draws);

  std::size_t burn_accepts = 0;
  std::size_t batch_accepts = 0;
  std::size_t kept_accepts = 0;

  for (std::size_t it = 0; it < total; ++it) {
    for (std::size_t k = 0; k < p; ++k) z[k] = normal(rng);
    for (std::size_t k = 0; k < p; ++k) {
      double dz = z[k];
      if (!chol.empty()) {
        dz = 0.0;
        for (std::size_t j = 0; j <= k; ++j) dz += chol[k * p + j] * z[j];
      }
      proposal[k] = theta[k] + step[k] * dz;
    }
    const double lp_prop = target.log_density(proposal);
    const bool accepted = std::log(uniform(rng)) < lp_prop - lp;
    if (accepted) {
      theta.swap(proposal);
      lp = lp_prop;
    }

    if (it < burn) {
      burn_accepts += accepted;
      batch_accepts += accepted;
      if (cfg.adapt && (it + 1) % kAdaptBatch == 0) {
        const double rate = static_cast<double>(batch_accepts) / kAdaptBatch;
        const double factor = std::exp(rate > cfg.target_accept ? kAdaptFactor : -kAdaptFactor);
        for (double& s : step) s = std::max(s * factor, kMinStepScale);
        batch_accepts = 0;
      }
      if (learn_corr) {
        if (it >= burn / 4) moments.add(theta);
        if (it + 1 == burn / 2 || it + 1 == 3 * burn / 4) refit_proposal(moments, step, chol);
      }
    } else {
      kept_accepts += accepted;
      out.draws.insert(out.draws.end(), theta.begin(), theta.end());
      out.log_density.push_back(lp);
    }
  }

  out.accept_rate = static_cast<double>(kept_accepts) / static_cast<double>(cfg.draws);
  out.burn_in_accept_rate =
      burn == 0 ? 0.0 : static_cast<double>(burn_accepts) / static_cast<double>(burn);
  out.final_state = std::move(theta);
  out.final_step_scale = std::move(step);
  out.final_proposal_cholesky = std::move(chol);
  if ((burn > 0 && burn_accepts == 0) || kept_accepts == 0) {
    out.degenerate = true;
    out.warning = burn > 0 && burn_accepts == 0
                      ? "degenerate chain: every proposal during burn-in was rejected"
                      : "degenerate chain: every retained proposal was rejected";
  }
  return out;
}

namespace {
// A Gaussian log density drops by 8 at four standard deviations. Probing that
// far out averages over many jumps of a piecewise-constant risk.
constexpr double kProfileDrop = 8.0;
}  // namespace

ParamVector suggest_step_scale(const GibbsTarget& target, std::span<const double> center) {
  const std::size_t p = target.param_dim();
  if (center.size() != p) throw std::invalid_argument("suggest_step_scale: wrong dimension");
  const double lp0 = target.log_density(center);
  if (!std::isfinite(lp0)) {
    throw std::invalid_argument("suggest_step_scale: log density at center is not finite");
  }
  ParamVector probe(center.begin(), center.end());
  ParamVector out(p);

  for (std::size_t k = 0; k < p; ++k) {
    // Average of both sides cancels the linear term, so an off-mode center
    // still sees the local curvature.
    auto drop = [&](double h) {
      probe[k] = center[k] + h;
      const double up = target.log_density(probe);
      probe[k] = center[k] - h;
      const double down = target.log_density(probe);
      probe[k] = center[k];
      return lp0 - 0.5 * (up + down);
    };
    const double unit = std::max(1.0, std::abs(center[k]));
    double lo = 0.0;
    double hi = 1e-3 * unit;
    if (drop(hi) >= kProfileDrop) {
      while (hi > 1e-12 * unit && drop(hi) >= kProfileDrop) hi *= 0.5;
      lo = hi;
      hi *= 2.0;
    } else {
      while (hi < 1e6 * unit && drop(hi) < kProfileDrop) {
        lo = hi;
        hi *= 2.0;
      }
    }
    for (int i = 0; i < 30 && hi - lo > 1e-3 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (drop(mid) < kProfileDrop ? lo : hi) = mid;
    }
    const double sd = hi / std::sqrt(2.0 * kProfileDrop);
    out[k] = std::max(kMinStepScale, 2.38 / std::sqrt(static_cast<double>(p)) * sd);
  }
  return out;
}

EssResult effective_sample_size(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 10) throw std::invalid_argument("effective_sample_size: need at least 10 values");
  if (std::all_of(chain.begin(), chain.end(), [&](double v) { return v == chain.front(); })) {
    return {0.0, true};
  }
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> c(n);
  for (std::size_t t = 0; t < n; ++t) c[t] = chain[t] - mean;

  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += c[t] * c[t + lag];
    return s / static_cast<double>(n);
  };
  const double gamma0 = autocov(0);
  if (!(gamma0 > 0.0)) return {0.0, true};

  double pair_sum = 0.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (autocov(2 * m) + autocov(2 * m + 1)) / gamma0;
    if (pair <= 0.0) break;
    pair_sum += pair;
  }
  const double tau = std::max(-1.0 + 2.0 * pair_sum, 1.0 / static_cast<double>(n));
  return {std::min(static_cast<double>(n), static_cast<double>(n) / tau), false};
}

void write_chain_csv(std::ostream& out, const PosteriorSample& sample) {
  out << "iter";
  for (std::size_t k = 0; k < sample.param_dim; ++k) out << ",theta_" << k;
  out << ",log_density\n";
  for (std::size_t i = 0; i < sample.size(); ++i) {
    out << i;
    for (double v : sample.draw(i)) out << ',' << csv::format_double(v);
    out << ',' << csv::format_double(sample.log_density[i]) << '\n';
  }
}

void write_chain_csv(const std::filesystem::path& path, const PosteriorSample& sample) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open " + path.string() + " for writing");
  write_chain_csv(out, sample);
}

}  // namespace gibbs
