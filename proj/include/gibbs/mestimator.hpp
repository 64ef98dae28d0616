#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gibbs/model.hpp"

namespace gibbs {

struct OptimizerConfig {
  std::size_t restarts = 5;
  std::optional<std::size_t> max_evals;  // per restart; defaults to 2000 * param_dim
  double x_tol = 1e-8;
  double f_tol = 1e-10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MEstimate {
  ParamVector theta_hat;
  double risk_value = 0.0;
  bool converged = false;
  bool bias_corrected = false;
  std::size_t evaluations = 0;
};

struct NelderMeadResult {
  ParamVector x;
  double f = 0.0;
  bool converged = false;
  std::size_t evaluations = 0;
};

/// Derivative-free Nelder-Mead simplex search. Stops once the simplex
/// diameter is below x_tol and the spread of vertex values is below f_tol.
/// When it stops the simplex is rebuilt around the best vertex and the search
/// resumes, until a rebuild no longer improves by more than f_tol; this keeps
/// it from stalling at kinks of nonsmooth objectives.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             ParamVector x0, ParamVector initial_step, std::size_t max_evals,
                             double x_tol, double f_tol);

/// Starting point: least squares of y on the covariates for regression
/// losses, the sample mean for squared error, and a least-squares
/// discriminant boundary rewritten in (theta0, slopes) form for
/// misclassification (zeros if that boundary is not usable).
ParamVector least_squares_initializer(const EmpiricalRisk& risk);

/// Best of `restarts` Nelder-Mead runs: the first from the initializer, the
/// rest from Gaussian perturbations of it. For piecewise-constant risks the
/// first minimizer found wins ties.
MEstimate minimize_risk(const EmpiricalRisk& risk, const OptimizerConfig& cfg = {});
MEstimate minimize_risk(const Dataset& data, const LossModel& loss,
                        const OptimizerConfig& cfg = {});

/// 2 * theta_hat - mean(boot_estimates).
ParamVector bias_corrected_estimate(const ParamVector& theta_hat,
                                    std::span<const ParamVector> boot_estimates);
ParamVector bias_corrected_estimate(const Dataset& data, const LossModel& loss,
                                    std::span<const ParamVector> boot_estimates,
                                    const OptimizerConfig& cfg = {});

}  // namespace gibbs
