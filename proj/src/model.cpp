#include "gibbs/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace gibbs {
namespace {

constexpr std::size_t kBlock = 128;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_dim(std::span<const double> theta, std::size_t expected, const char* who) {
  if (theta.size() != expected) {
    std::ostringstream msg;
    msg << who << ": parameter has dimension " << theta.size() << ", expected " << expected;
    throw std::invalid_argument(msg.str());
  }
}

// sign with sign(0) = +1; NaN stays NaN so corrupt rows are not silently scored.
inline double sign_nonneg(double z) {
  if (z >= 0.0) return 1.0;
  if (z < 0.0) return -1.0;
  return kNaN;
}

template <class Block>
double pairwise(std::size_t lo, std::size_t hi, const Block& block) {
  if (hi - lo <= kBlock) return block(lo, hi);
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise(lo, mid, block) + pairwise(mid, hi, block);
}

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

}  // namespace

double check_loss(std::span<const double> theta, const Observation& obs, double tau) {
  require_dim(theta, obs.covariates.size(), "check_loss");
  double fit = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) fit += obs.covariates[k] * theta[k];
  const double r = obs.response - fit;
  return std::abs(r * (tau - (r < 0.0 ? 1.0 : 0.0)));
}

double misclassification_loss(std::span<const double> theta, const Observation& obs,
                              std::size_t j) {
  const std::size_t d = obs.covariates.size();
  if (j >= d) throw std::invalid_argument("misclassification_loss: covariate index out of range");
  require_dim(theta, d, "misclassification_loss");
  if (obs.response != 1.0 && obs.response != -1.0) {
    throw std::invalid_argument("misclassification_loss: response is not a -1/+1 label");
  }
  double z = obs.covariates[j] - theta[0];
  for (std::size_t k = 0, s = 1; k < d; ++k) {
    if (k == j) continue;
    z -= obs.covariates[k] * theta[s++];
  }
  return 1.0 - obs.response * sign_nonneg(z);
}

double squared_error_loss(std::span<const double> theta, const Observation& obs) {
  require_dim(theta, 1, "squared_error_loss");
  const double r = obs.response - theta[0];
  return r * r;
}

// ---------------------------------------------------------------------------

LossModel LossModel::check(double tau, std::size_t param_dim) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw std::invalid_argument("check loss: tau must lie strictly inside (0, 1)");
  }
  if (param_dim == 0) throw std::invalid_argument("check loss: param_dim must be positive");
  return LossModel(LossKind::check, param_dim, tau, 0);
}

LossModel LossModel::misclassification(std::size_t j, std::size_t param_dim) {
  if (param_dim == 0) {
    throw std::invalid_argument("misclassification loss: param_dim must be positive");
  }
  if (j >= param_dim) {
    throw std::invalid_argument("misclassification loss: covariate index out of range");
  }
  return LossModel(LossKind::misclassification, param_dim, 0.0, j);
}

LossModel LossModel::squared_error() { return LossModel(LossKind::squared_error, 1, 0.0, 0); }

std::string LossModel::name() const {
  switch (kind_) {
    case LossKind::check: {
      std::ostringstream s;
      s << "check(tau=" << tau_ << ")";
      return s.str();
    }
    case LossKind::misclassification:
      return "misclassification(j=" + std::to_string(index_) + ")";
    case LossKind::squared_error:
      return "squared_error";
  }
  return "unknown";
}

ResponseKind LossModel::response_kind() const noexcept {
  return kind_ == LossKind::misclassification ? ResponseKind::label : ResponseKind::real;
}

void LossModel::validate(const Dataset& data) const {
  if (data.response_kind() != response_kind()) {
    throw std::invalid_argument(name() + ": dataset has the wrong response kind");
  }
  if (kind_ != LossKind::squared_error && data.dim() != param_dim_) {
    std::ostringstream msg;
    msg << name() << ": dataset has " << data.dim() << " covariates, loss expects "
        << param_dim_;
    throw std::invalid_argument(msg.str());
  }
}

double LossModel::operator()(std::span<const double> theta, const Observation& obs) const {
  switch (kind_) {
    case LossKind::check:
      return check_loss(theta, obs, tau_);
    case LossKind::misclassification:
      return misclassification_loss(theta, obs, index_);
    case LossKind::squared_error:
      return squared_error_loss(theta, obs);
  }
  return kNaN;
}

// ---------------------------------------------------------------------------

EmpiricalRisk::EmpiricalRisk(Dataset data, LossModel loss)
    : data_(std::move(data)), loss_(loss) {
  loss_.validate(data_);
  dim_ = loss_.kind() == LossKind::squared_error ? 0 : data_.dim();

  const std::size_t n = data_.size();
  const std::size_t d = dim_;
  const auto cov = data_.covariates();
  const auto resp = data_.responses();
  const std::size_t stride = data_.dim();

  // Canonical row order by bit pattern, then merge identical rows.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    for (std::size_t k = 0; k < d; ++k) {
      const auto ba = bits(cov[a * stride + k]);
      const auto bb = bits(cov[b * stride + k]);
      if (ba != bb) return ba < bb;
    }
    return bits(resp[a]) < bits(resp[b]);
  };
  auto same = [&](std::size_t a, std::size_t b) { return !less(a, b) && !less(b, a); };
  std::sort(order.begin(), order.end(), less);

  std::vector<std::size_t> distinct;
  for (std::size_t i = 0; i < n; ++i) {
    if (!distinct.empty() && same(order[i], distinct.back())) {
      weight_.back() += 1.0;
    } else {
      distinct.push_back(order[i]);
      weight_.push_back(1.0);
    }
  }
  const std::size_t m = distinct.size();
  columns_.resize(m * d);
  response_.resize(m);
  for (std::size_t u = 0; u < m; ++u) {
    const std::size_t i = distinct[u];
    for (std::size_t k = 0; k < d; ++k) columns_[k * m + u] = cov[i * stride + k];
    response_[u] = resp[i];
  }

  if (loss_.kind() == LossKind::squared_error) {
    const double* y = response_.data();
    const double* w = weight_.data();
    mean_ = pairwise(0, m, [&](std::size_t lo, std::size_t hi) {
              double s = 0.0;
              for (std::size_t u = lo; u < hi; ++u) s += w[u] * y[u];
              return s;
            }) / static_cast<double>(n);
    const double c = mean_;
    centred_ss_ = pairwise(0, m, [&](std::size_t lo, std::size_t hi) {
      double s = 0.0;
      for (std::size_t u = lo; u < hi; ++u) s += w[u] * (y[u] - c) * (y[u] - c);
      return s;
    });
  }
}

std::span<const double> EmpiricalRisk::column(std::size_t k) const {
  if (k >= dim_) throw std::out_of_range("EmpiricalRisk::column");
  const std::size_t m = weight_.size();
  return std::span<const double>(columns_).subspan(k * m, m);
}

double EmpiricalRisk::weighted_sum(std::span<const double> theta) const {
  const std::size_t m = weight_.size();
  const std::size_t d = dim_;
  const double* y = response_.data();
  const double* w = weight_.data();
  const double* cols = columns_.data();

  switch (loss_.kind()) {
    case LossKind::check: {
      const double tau = loss_.tau();
      return pairwise(0, m, [&](std::size_t lo, std::size_t hi) {
        double r[kBlock];
        const std::size_t len = hi - lo;
        for (std::size_t u = 0; u < len; ++u) r[u] = y[lo + u];
        for (std::size_t k = 0; k < d; ++k) {
          const double* x = cols + k * m + lo;
          const double t = theta[k];
          for (std::size_t u = 0; u < len; ++u) r[u] -= x[u] * t;
        }
        double s = 0.0;
        for (std::size_t u = 0; u < len; ++u) {
          s += w[lo + u] * (r[u] * (r[u] < 0.0 ? tau - 1.0 : tau));
        }
        return s;
      });
    }
    case LossKind::misclassification: {
      const std::size_t j = loss_.index();
      return pairwise(0, m, [&](std::size_t lo, std::size_t hi) {
        double z[kBlock];
        const std::size_t len = hi - lo;
        const double* xj = cols + j * m + lo;
        for (std::size_t u = 0; u < len; ++u) z[u] = xj[u] - theta[0];
        for (std::size_t k = 0, s = 1; k < d; ++k) {
          if (k == j) continue;
          const double* x = cols + k * m + lo;
          const double t = theta[s++];
          for (std::size_t u = 0; u < len; ++u) z[u] -= x[u] * t;
        }
        double s = 0.0;
        for (std::size_t u = 0; u < len; ++u) {
          s += w[lo + u] * (1.0 - y[lo + u] * sign_nonneg(z[u]));
        }
        return s;
      });
    }
    case LossKind::squared_error: {
      const double diff = mean_ - theta[0];
      return centred_ss_ + static_cast<double>(data_.size()) * diff * diff;
    }
  }
  return kNaN;
}

double EmpiricalRisk::operator()(std::span<const double> theta) const {
  require_dim(theta, loss_.param_dim(), "empirical_risk");
  const double value = weighted_sum(theta) / static_cast<double>(data_.size());
  if (std::isnan(value)) report_nan(theta);
  return value;
}

void EmpiricalRisk::report_nan(std::span<const double> theta) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (std::isnan(loss_(theta, data_.row(i)))) {
      throw NumericalError("empirical risk is NaN: loss at data row " + std::to_string(i) +
                               " is not a number",
                           i);
    }
  }
  throw NumericalError("empirical risk is NaN", data_.size());
}

double empirical_risk(std::span<const double> theta, const Dataset& data,
                      const LossModel& loss) {
  return EmpiricalRisk(data, loss)(theta);
}

// ---------------------------------------------------------------------------

Prior Prior::gaussian(ParamVector mean, ParamVector sd) {
  if (mean.empty() || mean.size() != sd.size()) {
    throw std::invalid_argument("gaussian prior: mean and sd must have the same nonzero length");
  }
  Prior p;
  double log_norm = 0.0;
  for (std::size_t k = 0; k < sd.size(); ++k) {
    if (!(sd[k] > 0.0) || !std::isfinite(sd[k]) || !std::isfinite(mean[k])) {
      throw std::invalid_argument("gaussian prior: sds must be positive and finite");
    }
    log_norm -= std::log(sd[k]) + 0.5 * std::log(2.0 * std::numbers::pi);
  }
  p.mean_ = std::move(mean);
  p.sd_ = std::move(sd);
  p.log_norm_ = log_norm;
  return p;
}

double Prior::log_density(std::span<const double> theta) const {
  if (is_flat()) return 0.0;
  require_dim(theta, mean_.size(), "Prior::log_density");
  double q = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double z = (theta[k] - mean_[k]) / sd_[k];
    q += z * z;
  }
  return log_norm_ - 0.5 * q;
}

std::string Prior::describe() const {
  if (is_flat()) return "flat";
  std::ostringstream s;
  s << "gaussian(";
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    if (k) s << ';';
    s << mean_[k] << ':' << sd_[k];
  }
  s << ')';
  return s.str();
}

// ---------------------------------------------------------------------------

GibbsTarget::GibbsTarget(Dataset data, LossModel loss, Prior prior, double omega)
    : GibbsTarget(std::make_shared<const EmpiricalRisk>(std::move(data), loss),
                  std::move(prior), omega) {}

GibbsTarget::GibbsTarget(std::shared_ptr<const EmpiricalRisk> risk, Prior prior,
                         double omega)
    : risk_(std::move(risk)), prior_(std::move(prior)), omega_(omega) {
  if (!risk_) throw std::invalid_argument("GibbsTarget: missing risk");
  if (!(omega_ > 0.0) || !std::isfinite(omega_)) {
    throw std::invalid_argument("GibbsTarget: omega must be positive and finite");
  }
  if (!prior_.is_flat() && prior_.mean().size() != risk_->param_dim()) {
    throw std::invalid_argument("GibbsTarget: prior dimension does not match the loss");
  }
}

GibbsTarget GibbsTarget::with_omega(double omega) const {
  return GibbsTarget(risk_, prior_, omega);
}

double GibbsTarget::log_density(std::span<const double> theta) const {
  for (double t : theta) {
    if (!std::isfinite(t)) return -std::numeric_limits<double>::infinity();
  }
  const double n = static_cast<double>(risk_->size());
  return -omega_ * n * (*risk_)(theta) + prior_.log_density(theta);
}

}  // namespace gibbs
