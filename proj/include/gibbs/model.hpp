#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gibbs/dataset.hpp"

namespace gibbs {

/// Parameter vector, intercept first. Entries must be finite.
using ParamVector = std::vector<double>;

/// Raised when the empirical risk is not a number; carries the first
/// data row whose loss is NaN.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t row)
      : std::runtime_error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// Pointwise losses. The check loss expects the intercept to be carried as a
// constant-1 covariate; the misclassification loss takes theta = (theta0,
// slopes for every covariate except the distinguished one).

/// |(y - x'theta)(tau - 1{y - x'theta < 0})|
double check_loss(std::span<const double> theta, const Observation& obs, double tau);

/// 1 - y * sign(x_j - x_(j)'theta1 - theta0) with sign(0) = +1; always 0 or 2.
double misclassification_loss(std::span<const double> theta, const Observation& obs,
                              std::size_t j);

/// (y - theta)^2 for a scalar theta; covariates are ignored.
double squared_error_loss(std::span<const double> theta, const Observation& obs);

enum class LossKind { check, misclassification, squared_error };

class LossModel {
 public:
  static LossModel check(double tau, std::size_t param_dim);
  static LossModel misclassification(std::size_t j, std::size_t param_dim);
  static LossModel squared_error();

  LossKind kind() const noexcept { return kind_; }
  std::size_t param_dim() const noexcept { return param_dim_; }
  double tau() const noexcept { return tau_; }
  std::size_t index() const noexcept { return index_; }
  std::string name() const;

  ResponseKind response_kind() const noexcept;

  /// Throws std::invalid_argument if the data cannot be fed to this loss.
  void validate(const Dataset& data) const;

  double operator()(std::span<const double> theta, const Observation& obs) const;

 private:
  LossModel(LossKind kind, std::size_t param_dim, double tau, std::size_t index)
      : kind_(kind), param_dim_(param_dim), tau_(tau), index_(index) {}

  LossKind kind_;
  std::size_t param_dim_;
  double tau_;
  std::size_t index_;
};

/// Empirical risk R_n(theta) = (1/n) sum_i loss(theta, X_i) bound to one
/// dataset.
///
/// Identical rows are merged and weighted by their multiplicity, and the rows
/// are put in a canonical order, so the value does not depend on the order of
/// the input rows. Sums use pairwise summation. For squared error the value is
/// computed from the weighted mean and centred sum of squares, which is the
/// same quantity without the per-row pass.
class EmpiricalRisk {
 public:
  EmpiricalRisk(Dataset data, LossModel loss);

  /// Throws NumericalError if the risk is NaN.
  double operator()(std::span<const double> theta) const;

  const Dataset& data() const noexcept { return data_; }
  const LossModel& loss() const noexcept { return loss_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t distinct_rows() const noexcept { return weight_.size(); }
  std::size_t param_dim() const noexcept { return loss_.param_dim(); }

  // Canonically ordered distinct rows, for callers that want weighted sums.
  std::span<const double> column(std::size_t k) const;
  std::span<const double> distinct_responses() const noexcept { return response_; }
  std::span<const double> weights() const noexcept { return weight_; }

 private:
  double weighted_sum(std::span<const double> theta) const;
  [[noreturn]] void report_nan(std::span<const double> theta) const;

  Dataset data_;
  LossModel loss_;
  std::size_t dim_ = 0;
  std::vector<double> columns_;  // dim_ columns of distinct_rows() entries
  std::vector<double> response_;
  std::vector<double> weight_;
  double mean_ = 0.0;            // squared error only
  double centred_ss_ = 0.0;      // squared error only
};

/// Convenience wrapper; builds an EmpiricalRisk. Throws on an empty dataset
/// or incompatible dimensions.
double empirical_risk(std::span<const double> theta, const Dataset& data,
                      const LossModel& loss);

/// Prior on theta: flat (improper, log density 0) or independent Gaussians.
/// With a flat prior, propriety of the Gibbs posterior is the caller's
/// responsibility.
class Prior {
 public:
  static Prior flat() { return Prior(); }
  static Prior gaussian(ParamVector mean, ParamVector sd);

  bool is_flat() const noexcept { return mean_.empty(); }
  const ParamVector& mean() const noexcept { return mean_; }
  const ParamVector& sd() const noexcept { return sd_; }
  double log_density(std::span<const double> theta) const;
  std::string describe() const;

 private:
  Prior() = default;
  ParamVector mean_;
  ParamVector sd_;
  double log_norm_ = 0.0;
};

/// Unnormalised Gibbs posterior log density -omega*n*R_n(theta) + log pi(theta).
class GibbsTarget {
 public:
  GibbsTarget(Dataset data, LossModel loss, Prior prior, double omega);
  GibbsTarget(std::shared_ptr<const EmpiricalRisk> risk, Prior prior, double omega);

  /// Same data and prior at a different scale; shares the compiled risk.
  GibbsTarget with_omega(double omega) const;

  /// Returns -infinity for non-finite theta.
  double log_density(std::span<const double> theta) const;

  double omega() const noexcept { return omega_; }
  std::size_t n() const noexcept { return risk_->size(); }
  std::size_t param_dim() const noexcept { return risk_->param_dim(); }
  const EmpiricalRisk& risk() const noexcept { return *risk_; }
  const std::shared_ptr<const EmpiricalRisk>& shared_risk() const noexcept { return risk_; }
  const Prior& prior() const noexcept { return prior_; }

 private:
  std::shared_ptr<const EmpiricalRisk> risk_;
  Prior prior_;
  double omega_;
};

inline double gibbs_log_density(const GibbsTarget& target, std::span<const double> theta) {
  return target.log_density(theta);
}

}  // namespace gibbs
