#include "gibbs/mestimator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "gibbs/random.hpp"

namespace gibbs {

void OptimizerConfig::validate() const {
  if (restarts == 0) throw std::invalid_argument("optimizer: restarts must be positive");
  if (max_evals && *max_evals == 0) {
    throw std::invalid_argument("optimizer: max_evals must be positive");
  }
  if (!(x_tol > 0.0) || !(f_tol > 0.0)) {
    throw std::invalid_argument("optimizer: x_tol and f_tol must be positive");
  }
}

namespace {

struct Simplex {
  std::vector<ParamVector> points;
  std::vector<double> values;
};

struct RunResult {
  ParamVector x;
  double f;
  bool converged;
};

RunResult simplex_search(const std::function<double(std::span<const double>)>& f,
                         const ParamVector& x0, double f0, const ParamVector& step,
                         std::size_t& evals, std::size_t max_evals, double x_tol,
                         double f_tol) {
  const std::size_t n = x0.size();
  Simplex s;
  s.points.assign(n + 1, x0);
  s.values.assign(n + 1, f0);
  for (std::size_t i = 0; i < n; ++i) {
    s.points[i + 1][i] += step[i];
    s.values[i + 1] = f(s.points[i + 1]);
    ++evals;
  }

  std::vector<std::size_t> order(n + 1);
  ParamVector centroid(n), trial(n), trial2(n);
  auto eval = [&](const ParamVector& x) {
    ++evals;
    return f(x);
  };
  auto along = [&](double coef, const ParamVector& from, ParamVector& out) {
    for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + coef * (from[k] - centroid[k]);
  };

  for (;;) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s.values[a] < s.values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[n - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        diameter = std::max(diameter, std::abs(s.points[i][k] - s.points[best][k]));
      }
    }
    const double spread = s.values[worst] - s.values[best];
    if (diameter <= x_tol && spread <= f_tol) return {s.points[best], s.values[best], true};
    if (evals >= max_evals) return {s.points[best], s.values[best], false};

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) centroid[k] += s.points[order[i]][k];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    along(-1.0, s.points[worst], trial);
    const double fr = eval(trial);
    if (fr < s.values[best]) {
      along(-2.0, s.points[worst], trial2);
      const double fe = eval(trial2);
      if (fe < fr) {
        s.points[worst] = trial2;
        s.values[worst] = fe;
      } else {
        s.points[worst] = trial;
        s.values[worst] = fr;
      }
      continue;
    }
    if (fr < s.values[second_worst]) {
      s.points[worst] = trial;
      s.values[worst] = fr;
      continue;
    }
    if (fr < s.values[worst]) {
      along(-0.5, s.points[worst], trial2);
      const double fc = eval(trial2);
      if (fc <= fr) {
        s.points[worst] = trial2;
        s.values[worst] = fc;
        continue;
      }
    } else {
      along(0.5, s.points[worst], trial2);
      const double fc = eval(trial2);
      if (fc < s.values[worst]) {
        s.points[worst] = trial2;
        s.values[worst] = fc;
        continue;
      }
    }
    // shrink toward the best vertex
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k) {
        s.points[i][k] = s.points[best][k] + 0.5 * (s.points[i][k] - s.points[best][k]);
      }
      s.values[i] = eval(s.points[i]);
    }
  }
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             ParamVector x0, ParamVector initial_step, std::size_t max_evals,
                             double x_tol, double f_tol) {
  if (x0.empty() || initial_step.size() != x0.size()) {
    throw std::invalid_argument("nelder_mead: bad starting point or step");
  }
  std::size_t evals = 1;
  double fx = f(x0);
  bool converged = false;
  constexpr int kMaxRebuilds = 20;
  for (int rebuild = 0; rebuild < kMaxRebuilds && evals < max_evals; ++rebuild) {
    const auto run = simplex_search(f, x0, fx, initial_step, evals, max_evals, x_tol, f_tol);
    const double gain = fx - run.f;
    converged = run.converged;
    if (run.f < fx) {
      x0 = run.x;
      fx = run.f;
    }
    if (!run.converged || gain <= f_tol) break;
    // Later rebuilds probe a smaller neighbourhood of the incumbent.
    for (double& h : initial_step) h = std::max(h * 0.5, 10.0 * x_tol);
  }
  return {std::move(x0), fx, converged, evals};
}

ParamVector least_squares_initializer(const EmpiricalRisk& risk) {
  const LossModel& loss = risk.loss();
  const std::size_t p = loss.param_dim();
  const auto y = risk.distinct_responses();
  const auto w = risk.weights();
  const std::size_t m = y.size();

  if (loss.kind() == LossKind::squared_error) {
    double sw = 0.0, swy = 0.0;
    for (std::size_t u = 0; u < m; ++u) {
      sw += w[u];
      swy += w[u] * y[u];
    }
    return {swy / sw};
  }

  const std::size_t d = risk.data().dim();
  const bool classification = loss.kind() == LossKind::misclassification;
  const std::size_t cols = classification ? d + 1 : d;
  Eigen::MatrixXd X(m, cols);
  Eigen::VectorXd Y(m);
  for (std::size_t u = 0; u < m; ++u) {
    const double sw = std::sqrt(w[u]);
    std::size_t c = 0;
    if (classification) X(u, c++) = sw;
    for (std::size_t k = 0; k < d; ++k) X(u, c++) = sw * risk.column(k)[u];
    Y(u) = sw * y[u];
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(Y);
  if (!beta.allFinite()) return ParamVector(p, 0.0);

  if (!classification) return ParamVector(beta.data(), beta.data() + beta.size());

  // Boundary b0 + sum_k b_k x_k = 0, solved for x_j.
  const std::size_t j = loss.index();
  const double bj = beta(1 + j);
  if (!(bj > 0.0)) return ParamVector(p, 0.0);
  ParamVector theta;
  theta.push_back(-beta(0) / bj);
  for (std::size_t k = 0; k < d; ++k) {
    if (k != j) theta.push_back(-beta(1 + k) / bj);
  }
  return theta;
}

MEstimate minimize_risk(const EmpiricalRisk& risk, const OptimizerConfig& cfg) {
  cfg.validate();
  const std::size_t p = risk.param_dim();
  if (risk.size() < p) {
    throw std::invalid_argument("minimize_risk: need at least as many rows as parameters");
  }
  const std::size_t max_evals = cfg.max_evals.value_or(2000 * p);
  auto objective = [&](std::span<const double> theta) { return risk(theta); };

  const ParamVector x0 = least_squares_initializer(risk);
  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  MEstimate best;
  best.theta_hat = x0;
  best.risk_value = risk(x0);
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    ParamVector start = x0;
    if (r > 0) {
      for (double& v : start) v += 0.25 * std::max(1.0, std::abs(v)) * normal(rng);
    }
    ParamVector step(p);
    for (std::size_t k = 0; k < p; ++k) step[k] = 0.1 * std::max(1.0, std::abs(start[k]));
    const auto run = nelder_mead(objective, start, step, max_evals, cfg.x_tol, cfg.f_tol);
    best.evaluations += run.evaluations;
    best.converged = best.converged || run.converged;
    if (run.f < best.risk_value) {
      best.theta_hat = run.x;
      best.risk_value = run.f;
    }
  }
  return best;
}

MEstimate minimize_risk(const Dataset& data, const LossModel& loss, const OptimizerConfig& cfg) {
  return minimize_risk(EmpiricalRisk(data, loss), cfg);
}

ParamVector bias_corrected_estimate(const ParamVector& theta_hat,
                                    std::span<const ParamVector> boot_estimates) {
  if (boot_estimates.empty()) {
    throw std::invalid_argument("bias_corrected_estimate: no bootstrap estimates");
  }
  ParamVector mean(theta_hat.size(), 0.0);
  for (const auto& b : boot_estimates) {
    if (b.size() != theta_hat.size()) {
      throw std::invalid_argument("bias_corrected_estimate: dimension mismatch");
    }
    for (std::size_t k = 0; k < b.size(); ++k) mean[k] += b[k];
  }
  ParamVector out(theta_hat.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = 2.0 * theta_hat[k] - mean[k] / static_cast<double>(boot_estimates.size());
  }
  return out;
}

ParamVector bias_corrected_estimate(const Dataset& data, const LossModel& loss,
                                    std::span<const ParamVector> boot_estimates,
                                    const OptimizerConfig& cfg) {
  return bias_corrected_estimate(minimize_risk(data, loss, cfg).theta_hat, boot_estimates);
}

}  // namespace gibbs
