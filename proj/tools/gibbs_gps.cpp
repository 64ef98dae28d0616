// gibbs-gps: calibrate the Gibbs posterior scale on a dataset, or run
// simulation studies. Exit status 0 = converged/complete, 2 = not converged,
// 1 = usage or data error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gibbs/experiments.hpp"
#include "gibbs/gps.hpp"
#include "gibbs/mestimator.hpp"
#include "gibbs/sampler.hpp"

using namespace gibbs;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

struct GpsOptions {
  double alpha = 0.05;
  std::size_t B = 100;
  std::size_t M = 2000;
  std::optional<std::size_t> burn_in;
  double omega_init = 1.0;
  double kappa0 = 1.0;
  double eps_tol = 0.01;
  std::size_t max_iter = 50;
  std::string coverage_mode = "average";
  bool no_warm_start = false;
  bool bias_correction = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  GpsConfig config() const {
    GpsConfig c;
    c.alpha = alpha;
    c.B = B;
    c.M = M;
    c.burn_in = burn_in;
    c.omega_init = omega_init;
    c.kappa0 = kappa0;
    c.eps_tol = eps_tol;
    c.max_iter = max_iter;
    c.coverage_mode = CoverageMode::parse(coverage_mode);
    c.warm_start = !no_warm_start;
    c.bias_correction = bias_correction;
    c.seed = seed;
    c.threads = threads;
    c.validate();
    return c;
  }
};

void add_gps_options(CLI::App* app, GpsOptions& o) {
  app->add_option("--alpha", o.alpha, "Credible level is 1 - alpha")->capture_default_str();
  app->add_option("--B", o.B, "Bootstrap resamples")->capture_default_str();
  app->add_option("--M", o.M, "Retained posterior draws per chain")->capture_default_str();
  app->add_option("--burn-in", o.burn_in, "Burn-in per chain (default M)");
  app->add_option("--omega-init", o.omega_init, "Starting scale")->capture_default_str();
  app->add_option("--kappa0", o.kappa0, "Gain constant, kappa_t = kappa0 t^(-3/4)")
      ->capture_default_str();
  app->add_option("--eps-tol", o.eps_tol, "Coverage tolerance")->capture_default_str();
  app->add_option("--max-iter", o.max_iter, "Iteration cap")->capture_default_str();
  app->add_option("--coverage-mode", o.coverage_mode, "average, all or coord:K")
      ->capture_default_str();
  app->add_flag("--no-warm-start", o.no_warm_start, "Restart chains at the anchor every round");
  app->add_flag("--bias-correction", o.bias_correction, "Anchor at the bootstrap bias-corrected estimate");
  app->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  app->add_option("--threads", o.threads, "Worker threads (0 = all cores)")->capture_default_str();
}

Prior make_prior(const std::string& spec, std::size_t p) {
  if (spec == "flat") return Prior::flat();
  if (spec.starts_with("gaussian:")) {
    const double sd = std::stod(spec.substr(9));
    return Prior::gaussian(ParamVector(p, 0.0), ParamVector(p, sd));
  }
  throw std::invalid_argument("unknown prior '" + spec + "' (expected flat or gaussian:SD)");
}

// --- calibrate -------------------------------------------------------------

struct CalibrateOptions {
  std::string data;
  std::string loss = "check";
  double tau = 0.5;
  std::size_t index = 0;
  std::string prior;
  bool add_intercept = false;
  std::string trace;
  std::string chain_out;
  GpsOptions gps;
};

int run_calibrate(const CalibrateOptions& o) {
  const bool labels = o.loss == "misclassification";
  Dataset data = read_dataset_csv(std::filesystem::path(o.data),
                                  labels ? ResponseKind::label : ResponseKind::real);
  if (o.add_intercept) data = with_intercept(data);

  LossModel loss = LossModel::squared_error();
  if (o.loss == "check") {
    loss = LossModel::check(o.tau, data.dim());
  } else if (labels) {
    loss = LossModel::misclassification(o.index, data.dim());
  } else if (o.loss != "squared") {
    throw std::invalid_argument("unknown loss '" + o.loss + "'");
  }
  loss.validate(data);
  const std::string prior_spec = o.prior.empty() ? (labels ? "gaussian:10" : "flat") : o.prior;
  const Prior prior = make_prior(prior_spec, loss.param_dim());
  const GpsConfig cfg = o.gps.config();

  const GpsResult r = gps_calibrate(data, loss, prior, cfg);

  std::printf("omega_n: %.10g\n", r.omega_n);
  std::printf("converged: %s\n", r.converged ? "true" : "false");
  std::printf("iterations: %zu\n", r.iterations);
  std::printf("theta_hat:");
  for (double v : r.theta_hat) std::printf(" %.10g", v);
  std::printf("\n");
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  if (o.trace.empty()) {
    std::printf("\n");
    std::fflush(stdout);
    write_trace_csv(std::cout, r);
    std::cout.flush();
  } else {
    write_trace_csv(std::filesystem::path(o.trace), r);
  }

  if (!o.chain_out.empty()) {
    const GibbsTarget target(data, loss, prior, r.omega_n);
    SamplerConfig chain;
    chain.draws = cfg.M;
    chain.burn_in = cfg.burn_in;
    chain.init = r.theta_hat;
    chain.step_scale = suggest_step_scale(target, r.theta_hat);
    chain.seed = cfg.seed;
    const auto sample = mh_sample(target, chain);
    if (sample.degenerate) std::fprintf(stderr, "warning: %s\n", sample.warning.c_str());
    write_chain_csv(std::filesystem::path(o.chain_out), sample);
  }
  return r.converged ? kExitOk : kExitNotConverged;
}

// --- study / fixed ---------------------------------------------------------

struct StudyCliOptions {
  std::string scenario = "quantreg";
  std::vector<std::size_t> n{100};
  std::size_t reps = 200;
  std::string out;
  std::string omega_out;
  std::string prior;
  double tau = 0.5;
  double error_sd = 2.0;
  double sigma = 1.0;
  double noise_sd = 0.5;
  std::optional<double> omega;  // set for `fixed`
  GpsOptions gps;
};

ScenarioSpec make_scenario(const StudyCliOptions& o, std::size_t n) {
  ScenarioSpec s;
  s.n = n;
  s.seed = o.gps.seed;
  if (o.scenario == "quantreg") {
    s.kind = QuantRegScenario{.tau = o.tau, .error_sd = o.error_sd};
  } else if (o.scenario == "normal_mean") {
    s.kind = NormalMeanScenario{.sigma = o.sigma};
  } else if (o.scenario == "classification") {
    s.kind = ClassificationScenario{.noise_sd = o.noise_sd};
  } else {
    throw std::invalid_argument("unknown scenario '" + o.scenario +
                                "' (expected quantreg, normal_mean or classification)");
  }
  s.validate();
  return s;
}

int run_study_command(const StudyCliOptions& o) {
  const GpsConfig cfg = o.gps.config();
  StudyOptions opts;
  opts.threads = o.gps.threads;
  std::vector<StudyReport> reports;
  for (std::size_t n : o.n) {
    const ScenarioSpec spec = make_scenario(o, n);
    if (!o.prior.empty()) opts.prior = make_prior(o.prior, scenario_loss(spec).param_dim());
    reports.push_back(o.omega ? fixed_omega_study(spec, *o.omega, o.reps, cfg, opts)
                              : run_coverage_study(spec, cfg, o.reps, opts));
    const auto& r = reports.back();
    for (const auto& msg : r.failure_messages) std::fprintf(stderr, "warning: %s\n", msg.c_str());
    if (r.not_converged > 0) {
      std::fprintf(stderr, "note: n=%zu: %zu of %zu calibrations hit max-iter\n", n,
                   r.not_converged, r.replications);
    }
  }
  if (o.out.empty()) {
    write_report_csv(std::cout, reports);
  } else {
    write_report_csv(std::filesystem::path(o.out), reports);
  }
  if (!o.omega_out.empty()) write_omega_csv(std::filesystem::path(o.omega_out), reports);
  return kExitOk;
}

void add_study_options(CLI::App* app, StudyCliOptions& o) {
  app->add_option("--scenario", o.scenario, "quantreg, normal_mean or classification")
      ->capture_default_str();
  app->add_option("--n", o.n, "Sample size(s)")->delimiter(',')->capture_default_str();
  app->add_option("--reps", o.reps, "Replications per sample size")->capture_default_str();
  app->add_option("--out", o.out, "Report CSV (default stdout)");
  app->add_option("--omega-out", o.omega_out, "Per-replication omega CSV");
  app->add_option("--prior", o.prior, "flat or gaussian:SD (default per scenario)");
  app->add_option("--tau", o.tau, "Quantile level (quantreg)")->capture_default_str();
  app->add_option("--error-sd", o.error_sd, "Error sd (quantreg)")->capture_default_str();
  app->add_option("--sigma", o.sigma, "Data sd (normal_mean)")->capture_default_str();
  app->add_option("--noise-sd", o.noise_sd, "Label noise sd (classification)")
      ->capture_default_str();
  add_gps_options(app, o.gps);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gibbs posterior scaling"};
  app.require_subcommand(1);

  CalibrateOptions cal;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate omega on a CSV dataset");
  calibrate->add_option("--data", cal.data, "CSV with header x1,...,xp,y")->required();
  calibrate->add_option("--loss", cal.loss, "check, misclassification or squared")
      ->capture_default_str();
  calibrate->add_option("--tau", cal.tau, "Quantile level for check loss")->capture_default_str();
  calibrate->add_option("--index", cal.index, "Distinguished covariate for misclassification")
      ->capture_default_str();
  calibrate->add_option("--prior", cal.prior, "flat or gaussian:SD");
  calibrate->add_flag("--add-intercept", cal.add_intercept, "Prepend a constant-1 covariate");
  calibrate->add_option("--trace", cal.trace, "Write the trace CSV here instead of stdout");
  calibrate->add_option("--chain-out", cal.chain_out, "Write a posterior chain at omega_n");
  add_gps_options(calibrate, cal.gps);

  StudyCliOptions study_opts;
  auto* study = app.add_subcommand("study", "Coverage study with GPS calibration");
  add_study_options(study, study_opts);

  StudyCliOptions fixed_opts;
  double fixed_omega = 0.0;
  auto* fixed = app.add_subcommand("fixed", "Coverage study at a fixed omega");
  fixed->add_option("--omega", fixed_omega, "Scale")->required();
  add_study_options(fixed, fixed_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*calibrate) return run_calibrate(cal);
    if (*study) return run_study_command(study_opts);
    fixed_opts.omega = fixed_omega;
    return run_study_command(fixed_opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
}
