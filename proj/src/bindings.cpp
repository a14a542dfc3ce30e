#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>

#include "twinsipm/analysis.hpp"
#include "twinsipm/detector.hpp"
#include "twinsipm/distribution.hpp"
#include "twinsipm/errors.hpp"
#include "twinsipm/io.hpp"
#include "twinsipm/simulate.hpp"
#include "twinsipm/version.hpp"

namespace py = pybind11;
using namespace twinsipm;

namespace {

py::array_t<std::uint32_t> series_to_numpy(const ShotSeries& series) {
  const py::ssize_t n = static_cast<py::ssize_t>(series.shots.size());
  py::array_t<std::uint32_t> out({n, static_cast<py::ssize_t>(2)});
  auto view = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i) {
    view(i, 0) = series.shots[static_cast<std::size_t>(i)][0];
    view(i, 1) = series.shots[static_cast<std::size_t>(i)][1];
  }
  return out;
}

ShotSeries series_from_array(py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast> counts) {
  if (counts.ndim() != 2 || counts.shape(1) != 2) {
    throw ValidationError("counts: expected an array of shape (n_shots, 2)");
  }
  ShotSeries series;
  const auto view = counts.unchecked<2>();
  series.shots.resize(static_cast<std::size_t>(counts.shape(0)));
  for (py::ssize_t i = 0; i < counts.shape(0); ++i) {
    series.shots[static_cast<std::size_t>(i)] = {view(i, 0), view(i, 1)};
  }
  return series;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "twin-beam SiPM photon statistics toolkit";
  m.attr("__version__") = kVersion;

  // Base classes first: translators run newest-first, so the derived types
  // below shadow these for their own instances.
  auto validation_error = py::register_exception<ValidationError>(m, "ValidationError",
                                                                  PyExc_ValueError);
  auto data_error = py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<UndefinedStatisticError>(m, "UndefinedStatisticError",
                                                  data_error.ptr());
  py::register_exception<DivergentStatisticError>(m, "DivergentStatisticError",
                                                  data_error.ptr());
  py::register_exception<InsufficientStatisticsError>(m, "InsufficientStatisticsError",
                                                      data_error.ptr());
  py::register_exception<AmbiguousBinError>(m, "AmbiguousBinError", data_error.ptr());
  (void)validation_error;

  py::class_<Moments>(m, "Moments")
      .def(py::init<>())
      .def_readwrite("mean", &Moments::mean)
      .def_readwrite("variance", &Moments::variance)
      .def_readwrite("second_raw", &Moments::second_raw)
      .def("__repr__", [](const Moments& mm) {
        return "Moments(mean=" + std::to_string(mm.mean) +
               ", variance=" + std::to_string(mm.variance) + ")";
      });

  py::class_<PhotonDistribution>(m, "PhotonDistribution")
      .def_static("from_probs", &PhotonDistribution::from_probs, py::arg("probs"),
                  py::arg("tail_mass") = 0.0)
      .def_static("delta", &PhotonDistribution::delta, py::arg("n"))
      .def_readonly("probs", &PhotonDistribution::probs)
      .def_readonly("tail_mass", &PhotonDistribution::tail_mass)
      .def("max_count", &PhotonDistribution::max_count)
      .def("prob", &PhotonDistribution::prob, py::arg("n"))
      .def("truncated", &PhotonDistribution::truncated, py::arg("tol"))
      .def("__len__", [](const PhotonDistribution& d) { return d.probs.size(); });

  m.def("multimode_thermal", &multimode_thermal, py::arg("mean"), py::arg("modes"),
        py::arg("tail_tol") = kDefaultTailTol);
  m.def("poisson", &poisson, py::arg("mean"), py::arg("tail_tol") = kDefaultTailTol);
  m.def("convolve", &convolve, py::arg("a"), py::arg("b"),
        py::arg("tail_tol") = kDefaultTailTol);
  m.def("moments", &moments, py::arg("dist"));
  m.def("g2_photons", &g2_photons, py::arg("moments"));
  m.def("g2_counts", &g2_counts, py::arg("moments"));
  m.def("fano", &fano, py::arg("moments"));

  py::class_<DetectorConfig>(m, "DetectorConfig")
      .def(py::init([](double eta, double epsilon, double dark_mean, double gain) {
             DetectorConfig c{eta, epsilon, dark_mean, gain};
             c.validate();
             return c;
           }),
           py::arg("eta") = 1.0, py::arg("epsilon") = 0.0, py::arg("dark_mean") = 0.0,
           py::arg("gain") = 1.0)
      .def_readwrite("eta", &DetectorConfig::eta)
      .def_readwrite("epsilon", &DetectorConfig::epsilon)
      .def_readwrite("dark_mean", &DetectorConfig::dark_mean)
      .def_readwrite("gain", &DetectorConfig::gain)
      .def("validate", &DetectorConfig::validate, py::arg("prefix") = "detector");

  m.def("bernoulli_loss", &bernoulli_loss, py::arg("dist"), py::arg("eta"));
  m.def("add_dark_counts", &add_dark_counts, py::arg("dist"), py::arg("dark_mean"),
        py::arg("tail_tol") = kDefaultTailTol);
  m.def("apply_crosstalk", &apply_crosstalk, py::arg("dist"), py::arg("epsilon"));
  m.def("detector_response", &detector_response, py::arg("photons"), py::arg("config"),
        py::arg("tail_tol") = kDefaultTailTol);
  m.def("avalanche_moments", &avalanche_moments, py::arg("detected"), py::arg("dark_mean"),
        py::arg("epsilon"));
  m.def("g2_avalanche_model", &g2_avalanche_model, py::arg("g2_photon"), py::arg("k_mean"),
        py::arg("dark_mean"), py::arg("epsilon"));
  m.def("g2_avalanche_multimode", &g2_avalanche_multimode, py::arg("k_mean"), py::arg("modes"),
        py::arg("epsilon"), py::arg("dark_mean"));

  py::enum_<SensitivityParam>(m, "SensitivityParam")
      .value("epsilon", SensitivityParam::kEpsilon)
      .value("dark_mean", SensitivityParam::kDarkMean);
  m.def("sensitivity_beta", &sensitivity_beta, py::arg("param"), py::arg("modes"),
        py::arg("k_mean"));

  py::class_<TwbParams>(m, "TwbParams")
      .def(py::init([](std::int64_t modes, double mean_n, DetectorConfig det1,
                       DetectorConfig det2) {
             TwbParams p{modes, mean_n, det1, det2};
             p.validate();
             return p;
           }),
           py::arg("modes"), py::arg("mean_n"), py::arg("det1"), py::arg("det2"))
      .def_readwrite("modes", &TwbParams::modes)
      .def_readwrite("mean_n", &TwbParams::mean_n)
      .def_readwrite("det1", &TwbParams::det1)
      .def_readwrite("det2", &TwbParams::det2);

  py::class_<ShotSeries>(m, "ShotSeries")
      .def_static("from_array", &series_from_array, py::arg("counts"))
      .def("to_numpy", &series_to_numpy)
      .def_property_readonly("n_shots",
                             [](const ShotSeries& s) { return s.shots.size(); })
      .def_readonly("seed", &ShotSeries::seed)
      .def_readonly("has_params", &ShotSeries::has_params)
      .def_readonly("params", &ShotSeries::params);

  m.def("sample_twb", &sample_twb, py::arg("params"), py::arg("n_shots"), py::arg("seed"),
        py::arg("threads") = 1);
  m.def("marginal_distribution", &marginal_distribution, py::arg("series"), py::arg("arm"));
  m.def("analog_from_count", &analog_from_count, py::arg("count"), py::arg("gain"));
  m.def("count_from_analog", &count_from_analog, py::arg("x"), py::arg("gain"));

  py::class_<BootstrapOptions>(m, "BootstrapOptions")
      .def(py::init([](std::uint32_t resamples, std::uint64_t seed, unsigned threads) {
             BootstrapOptions o{resamples, seed, threads};
             o.validate();
             return o;
           }),
           py::arg("resamples") = 1000, py::arg("seed") = 0, py::arg("threads") = 1)
      .def_readwrite("resamples", &BootstrapOptions::resamples)
      .def_readwrite("seed", &BootstrapOptions::seed)
      .def_readwrite("threads", &BootstrapOptions::threads);

  py::class_<ValueWithError>(m, "ValueWithError")
      .def_readonly("value", &ValueWithError::value)
      .def_readonly("stderr", &ValueWithError::std_err)
      .def("__repr__", [](const ValueWithError& v) {
        return std::to_string(v.value) + " +- " + std::to_string(v.std_err);
      });

  py::class_<CorrelationStats>(m, "CorrelationStats")
      .def_readonly("n_shots", &CorrelationStats::n_shots)
      .def_readonly("mean1", &CorrelationStats::mean1)
      .def_readonly("mean2", &CorrelationStats::mean2)
      .def_readonly("sum_mean", &CorrelationStats::sum_mean)
      .def_readonly("diff_mean", &CorrelationStats::diff_mean)
      .def_readonly("diff_variance", &CorrelationStats::diff_variance)
      .def_readonly("nrf", &CorrelationStats::nrf)
      .def_readonly("diff_divergent", &CorrelationStats::diff_divergent)
      .def_readonly("g2_diff_detected", &CorrelationStats::g2_diff_detected)
      .def_readonly("g2_diff_photons_excess", &CorrelationStats::g2_diff_photons_excess);

  m.def("correlation_stats", &correlation_stats, py::arg("series"), py::arg("opts"));
  m.def("noise_reduction_factor", &noise_reduction_factor, py::arg("series"), py::arg("opts"));
  m.def("g2_diff_detected", &g2_diff_detected, py::arg("series"), py::arg("opts"));
  m.def("g2_diff_photons_excess", &g2_diff_photons_excess, py::arg("series"), py::arg("opts"));
  m.def("nrf_model", &nrf_model, py::arg("mean1"), py::arg("mean2"), py::arg("eta1"),
        py::arg("eta2"), py::arg("modes"));
  m.def("g2_diff_model", &g2_diff_model, py::arg("nrf"), py::arg("sum_mean"),
        py::arg("diff_mean"));
  m.def("arm_g2", &arm_g2, py::arg("series"), py::arg("arm"), py::arg("opts"));

  py::class_<ConditionalStats>(m, "ConditionalStats")
      .def_readonly("m_cond", &ConditionalStats::m_cond)
      .def_readonly("n_selected", &ConditionalStats::n_selected)
      .def_readonly("mean", &ConditionalStats::mean)
      .def_readonly("fano", &ConditionalStats::fano)
      .def_readonly("g2_photons_excess", &ConditionalStats::g2_photons_excess);

  m.def("conditional_stats", &conditional_stats, py::arg("series"), py::arg("conditioning_arm"),
        py::arg("m_cond"), py::arg("opts"));
  m.def("fano_conditional_model", &fano_conditional_model, py::arg("eta"), py::arg("modes"),
        py::arg("mean_m"), py::arg("m_cond"));
  m.def("g2_excess_from_fano", &g2_excess_from_fano, py::arg("fano"), py::arg("mean"));

  py::class_<CurvePoint>(m, "CurvePoint")
      .def(py::init([](double k_mean, double g2, double std_err) {
             return CurvePoint{k_mean, g2, std_err};
           }),
           py::arg("k_mean"), py::arg("g2"), py::arg("stderr"))
      .def_readwrite("k_mean", &CurvePoint::k_mean)
      .def_readwrite("g2", &CurvePoint::g2)
      .def_readwrite("stderr", &CurvePoint::std_err);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("epsilon", &FitResult::epsilon)
      .def_readonly("dark_mean", &FitResult::dark_mean)
      .def_readonly("epsilon_err", &FitResult::epsilon_err)
      .def_readonly("dark_err", &FitResult::dark_err)
      .def_readonly("chi2", &FitResult::chi2)
      .def_readonly("residual_rms", &FitResult::residual_rms)
      .def_readonly("mu_fixed", &FitResult::mu_fixed)
      .def_readonly("n_points", &FitResult::n_points);

  m.def("fit_detector_params", &fit_detector_params, py::arg("points"), py::arg("mu_fixed"));

  m.def("write_shot_csv", &write_shot_csv, py::arg("path"), py::arg("series"));
  m.def("read_shot_csv", &read_shot_csv, py::arg("path"));
  m.def("write_analog_csv", &write_analog_csv, py::arg("path"), py::arg("series"),
        py::arg("gain1"), py::arg("gain2"));
  m.def("read_analog_csv", &read_analog_csv, py::arg("path"), py::arg("gain1"),
        py::arg("gain2"));
  m.def("read_curve_csv", &read_curve_csv, py::arg("path"));
  m.def("write_curve_csv", &write_curve_csv, py::arg("path"), py::arg("points"));
  m.def(
      "analysis_report",
      [](const ShotSeries& series, const BootstrapOptions& opts, int condition_arm,
         std::uint32_t m_lo, std::uint32_t m_hi) {
        std::optional<ConditionalRequest> cond;
        if (condition_arm != 0) {
          cond = ConditionalRequest{condition_arm, m_lo, m_hi};
        }
        return analysis_report_json(series, opts, cond).dump(2);
      },
      py::arg("series"), py::arg("opts"), py::arg("condition_arm") = 0, py::arg("m_lo") = 0,
      py::arg("m_hi") = 0);
}
