#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gibbs/credible.hpp"
#include "gibbs/dataset.hpp"
#include "gibbs/experiments.hpp"
#include "gibbs/gps.hpp"
#include "gibbs/mestimator.hpp"
#include "gibbs/model.hpp"
#include "gibbs/sampler.hpp"

namespace py = pybind11;
using namespace gibbs;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Dataset make_dataset(std::optional<DoubleArray> x, const DoubleArray& y, bool labels) {
  if (y.ndim() != 1) throw std::invalid_argument("y must be one-dimensional");
  const auto n = static_cast<std::size_t>(y.shape(0));
  std::vector<double> resp(y.data(), y.data() + n);
  std::vector<double> cov;
  std::size_t dim = 0;
  if (x) {
    if (x->ndim() == 1) {
      dim = 1;
    } else if (x->ndim() == 2) {
      dim = static_cast<std::size_t>(x->shape(1));
    } else {
      throw std::invalid_argument("x must be one- or two-dimensional");
    }
    if (static_cast<std::size_t>(x->shape(0)) != n) {
      throw std::invalid_argument("x and y have different numbers of rows");
    }
    cov.assign(x->data(), x->data() + n * dim);
  }
  return Dataset(std::move(cov), dim, std::move(resp),
                 labels ? ResponseKind::label : ResponseKind::real);
}

py::array_t<double> to_matrix(const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
  py::array_t<double> out({rows, cols});
  std::copy(flat.begin(), flat.end(), out.mutable_data());
  return out;
}

ScenarioSpec make_scenario(const std::string& kind, std::size_t n, std::uint64_t seed,
                           const py::kwargs& params) {
  ScenarioSpec s;
  s.n = n;
  s.seed = seed;
  auto get = [&](const char* key, double fallback) {
    return params.contains(key) ? params[key].cast<double>() : fallback;
  };
  if (kind == "normal_mean") {
    s.kind = NormalMeanScenario{.sigma = get("sigma", 1.0)};
  } else if (kind == "quantreg") {
    s.kind = QuantRegScenario{.tau = get("tau", 0.5),
                              .theta0 = get("theta0", 2.0),
                              .theta1 = get("theta1", 1.0),
                              .error_sd = get("error_sd", 2.0)};
  } else if (kind == "classification") {
    s.kind = ClassificationScenario{.noise_sd = get("noise_sd", 0.5)};
  } else {
    throw std::invalid_argument("unknown scenario '" + kind + "'");
  }
  s.validate();
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gibbs posteriors with bootstrap-calibrated scale";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<DegenerateChainsError>(m, "DegenerateChainsError", PyExc_RuntimeError);
  py::register_exception<StudyError>(m, "StudyError", PyExc_RuntimeError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("x"), py::arg("y"), py::arg("labels") = false)
      .def_property_readonly("size", &Dataset::size)
      .def_property_readonly("dim", &Dataset::dim)
      .def_property_readonly("is_labels",
                             [](const Dataset& d) { return d.response_kind() == ResponseKind::label; })
      .def_property_readonly("x",
                             [](const Dataset& d) {
                               const auto c = d.covariates();
                               return to_matrix({c.begin(), c.end()}, d.size(), d.dim());
                             })
      .def_property_readonly("y",
                             [](const Dataset& d) {
                               const auto r = d.responses();
                               return py::array_t<double>(r.size(), r.data());
                             })
      .def("with_intercept", &with_intercept)
      .def("__len__", &Dataset::size);

  m.def("read_dataset_csv",
        [](const std::filesystem::path& p, bool labels) {
          return read_dataset_csv(p, labels ? ResponseKind::label : ResponseKind::real);
        },
        py::arg("path"), py::arg("labels") = false);
  m.def("write_dataset_csv",
        py::overload_cast<const std::filesystem::path&, const Dataset&>(&write_dataset_csv),
        py::arg("path"), py::arg("data"));

  py::class_<LossModel>(m, "LossModel")
      .def_static("check", &LossModel::check, py::arg("tau"), py::arg("param_dim"))
      .def_static("misclassification", &LossModel::misclassification, py::arg("index"),
                  py::arg("param_dim"))
      .def_static("squared_error", &LossModel::squared_error)
      .def_property_readonly("name", &LossModel::name)
      .def_property_readonly("param_dim", &LossModel::param_dim)
      .def("__repr__", [](const LossModel& l) { return "<LossModel " + l.name() + ">"; });

  py::class_<Prior>(m, "Prior")
      .def_static("flat", &Prior::flat)
      .def_static("gaussian", &Prior::gaussian, py::arg("mean"), py::arg("sd"))
      .def("log_density", [](const Prior& p, const ParamVector& t) { return p.log_density(t); })
      .def("__repr__", &Prior::describe);

  m.def("empirical_risk",
        [](const ParamVector& theta, const Dataset& d, const LossModel& l) {
          return empirical_risk(theta, d, l);
        },
        py::arg("theta"), py::arg("data"), py::arg("loss"));

  py::class_<GibbsTarget>(m, "GibbsTarget")
      .def(py::init<Dataset, LossModel, Prior, double>(), py::arg("data"), py::arg("loss"),
           py::arg("prior"), py::arg("omega"))
      .def_property_readonly("omega", &GibbsTarget::omega)
      .def("log_density", [](const GibbsTarget& t, const ParamVector& theta) {
        return t.log_density(theta);
      });

  py::class_<SamplerConfig>(m, "SamplerConfig")
      .def(py::init<>())
      .def_readwrite("draws", &SamplerConfig::draws)
      .def_readwrite("burn_in", &SamplerConfig::burn_in)
      .def_readwrite("init", &SamplerConfig::init)
      .def_readwrite("step_scale", &SamplerConfig::step_scale)
      .def_readwrite("adapt", &SamplerConfig::adapt)
      .def_readwrite("adapt_correlation", &SamplerConfig::adapt_correlation)
      .def_readwrite("target_accept", &SamplerConfig::target_accept)
      .def_readwrite("seed", &SamplerConfig::seed);

  py::class_<PosteriorSample>(m, "PosteriorSample")
      .def_property_readonly("draws",
                             [](const PosteriorSample& s) {
                               return to_matrix(s.draws, s.size(), s.param_dim);
                             })
      .def_readonly("log_density", &PosteriorSample::log_density)
      .def_readonly("accept_rate", &PosteriorSample::accept_rate)
      .def_readonly("final_state", &PosteriorSample::final_state)
      .def_readonly("final_step_scale", &PosteriorSample::final_step_scale)
      .def_readonly("degenerate", &PosteriorSample::degenerate)
      .def_readonly("warning", &PosteriorSample::warning);

  m.def("mh_sample", &mh_sample, py::arg("target"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("suggest_step_scale",
        [](const GibbsTarget& t, const ParamVector& c) { return suggest_step_scale(t, c); },
        py::arg("target"), py::arg("center"));
  m.def("effective_sample_size",
        [](const std::vector<double>& chain) {
          const auto r = effective_sample_size(chain);
          return py::make_tuple(r.ess, r.degenerate);
        },
        py::arg("chain"));

  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init<>())
      .def_readwrite("restarts", &OptimizerConfig::restarts)
      .def_readwrite("max_evals", &OptimizerConfig::max_evals)
      .def_readwrite("x_tol", &OptimizerConfig::x_tol)
      .def_readwrite("f_tol", &OptimizerConfig::f_tol)
      .def_readwrite("seed", &OptimizerConfig::seed);

  py::class_<MEstimate>(m, "MEstimate")
      .def_readonly("theta_hat", &MEstimate::theta_hat)
      .def_readonly("risk_value", &MEstimate::risk_value)
      .def_readonly("converged", &MEstimate::converged)
      .def_readonly("evaluations", &MEstimate::evaluations);

  m.def("minimize_risk",
        [](const Dataset& d, const LossModel& l, const OptimizerConfig& c) {
          return minimize_risk(d, l, c);
        },
        py::arg("data"), py::arg("loss"), py::arg("config") = OptimizerConfig{});
  m.def("bias_corrected_estimate",
        [](const ParamVector& hat, const std::vector<ParamVector>& boot) {
          return bias_corrected_estimate(hat, boot);
        },
        py::arg("theta_hat"), py::arg("boot_estimates"));

  py::class_<CredibleInterval>(m, "CredibleInterval")
      .def_readonly("lower", &CredibleInterval::lower)
      .def_readonly("upper", &CredibleInterval::upper)
      .def_readonly("level", &CredibleInterval::level)
      .def_property_readonly("length", &CredibleInterval::length)
      .def("contains", &CredibleInterval::contains)
      .def("__repr__", [](const CredibleInterval& c) {
        return "CredibleInterval(" + std::to_string(c.lower) + ", " + std::to_string(c.upper) + ")";
      });

  py::class_<CoverageMode>(m, "CoverageMode")
      .def_static("parse", &CoverageMode::parse)
      .def("__str__", &CoverageMode::to_string);

  m.def("equal_tailed_interval",
        [](const std::vector<double>& d, double a) { return equal_tailed_interval(d, a); },
        py::arg("draws"), py::arg("alpha"));
  m.def("interpolated_quantile",
        [](std::vector<double> v, double q) {
          std::sort(v.begin(), v.end());
          return interpolated_quantile(v, q);
        },
        py::arg("values"), py::arg("q"));
  m.def("marginal_intervals", &marginal_intervals, py::arg("sample"), py::arg("alpha"));
  m.def("coverage_event",
        [](const std::vector<CredibleInterval>& iv, const ParamVector& theta,
           const std::string& mode) { return coverage_event(iv, theta, CoverageMode::parse(mode)); },
        py::arg("intervals"), py::arg("theta"), py::arg("mode") = "average");

  py::class_<GpsConfig>(m, "GpsConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &GpsConfig::alpha)
      .def_readwrite("B", &GpsConfig::B)
      .def_readwrite("M", &GpsConfig::M)
      .def_readwrite("burn_in", &GpsConfig::burn_in)
      .def_readwrite("omega_init", &GpsConfig::omega_init)
      .def_readwrite("kappa0", &GpsConfig::kappa0)
      .def_readwrite("kappa_exponent", &GpsConfig::kappa_exponent)
      .def_readwrite("eps_tol", &GpsConfig::eps_tol)
      .def_readwrite("max_iter", &GpsConfig::max_iter)
      .def_readwrite("omega_min", &GpsConfig::omega_min)
      .def_property(
          "coverage_mode", [](const GpsConfig& c) { return c.coverage_mode.to_string(); },
          [](GpsConfig& c, const std::string& s) { c.coverage_mode = CoverageMode::parse(s); })
      .def_readwrite("warm_start", &GpsConfig::warm_start)
      .def_readwrite("bias_correction", &GpsConfig::bias_correction)
      .def_readwrite("seed", &GpsConfig::seed)
      .def_readwrite("threads", &GpsConfig::threads);

  py::class_<GpsResult>(m, "GpsResult")
      .def_readonly("omega_n", &GpsResult::omega_n)
      .def_readonly("converged", &GpsResult::converged)
      .def_readonly("iterations", &GpsResult::iterations)
      .def_readonly("theta_hat", &GpsResult::theta_hat)
      .def_readonly("warnings", &GpsResult::warnings)
      .def_property_readonly("trace", [](const GpsResult& r) {
        py::list out;
        for (const auto& it : r.trace) out.append(py::make_tuple(it.t, it.omega, it.c_hat, it.kappa));
        return out;
      });

  m.def("gps_calibrate", &gps_calibrate, py::arg("data"), py::arg("loss"), py::arg("prior"),
        py::arg("config") = GpsConfig{}, py::call_guard<py::gil_scoped_release>());
  m.def("sa_step", &sa_step, py::arg("omega"), py::arg("c_hat"), py::arg("t"),
        py::arg("config") = GpsConfig{});
  m.def("bootstrap_indices", &bootstrap_indices, py::arg("n"), py::arg("B"), py::arg("seed"));

  py::class_<ScenarioSpec>(m, "ScenarioSpec")
      .def(py::init(&make_scenario), py::arg("kind"), py::arg("n") = 100, py::arg("seed") = 0)
      .def_readwrite("n", &ScenarioSpec::n)
      .def_readwrite("seed", &ScenarioSpec::seed)
      .def_property_readonly("name", &ScenarioSpec::name);

  m.def("generate",
        [](const ScenarioSpec& s) {
          auto g = generate(s);
          return py::make_tuple(g.data, g.theta_star);
        },
        py::arg("spec"));
  m.def("scenario_loss", &scenario_loss, py::arg("spec"));
  m.def("default_prior", &default_prior, py::arg("spec"));

  py::class_<StudyReport>(m, "StudyReport")
      .def_readonly("scenario", &StudyReport::scenario)
      .def_readonly("n", &StudyReport::n)
      .def_readonly("method", &StudyReport::method)
      .def_readonly("prior", &StudyReport::prior)
      .def_readonly("parameters", &StudyReport::parameters)
      .def_readonly("coverage", &StudyReport::coverage)
      .def_readonly("mean_length", &StudyReport::mean_length)
      .def_readonly("mean_posterior_sd", &StudyReport::mean_posterior_sd)
      .def_readonly("joint_coverage", &StudyReport::joint_coverage)
      .def_readonly("omega_samples", &StudyReport::omega_samples)
      .def_readonly("replications", &StudyReport::replications)
      .def_readonly("failures", &StudyReport::failures)
      .def_readonly("not_converged", &StudyReport::not_converged);

  m.def("run_coverage_study",
        [](const ScenarioSpec& s, const GpsConfig& c, std::size_t reps, unsigned threads) {
          StudyOptions o;
          o.threads = threads;
          return run_coverage_study(s, c, reps, o);
        },
        py::arg("spec"), py::arg("config") = GpsConfig{}, py::arg("replications") = 200,
        py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>());
  m.def("fixed_omega_study",
        [](const ScenarioSpec& s, double omega, std::size_t reps, const GpsConfig& c,
           unsigned threads) {
          StudyOptions o;
          o.threads = threads;
          return fixed_omega_study(s, omega, reps, c, o);
        },
        py::arg("spec"), py::arg("omega"), py::arg("replications") = 200,
        py::arg("config") = GpsConfig{}, py::arg("threads") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("asymptotic_omega_oracle", &asymptotic_omega_oracle, py::arg("tau"), py::arg("error_sd"));
}
