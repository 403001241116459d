// Python module schmidt_bench._core.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "schmidt/calibration.hpp"
#include "schmidt/config.hpp"
#include "schmidt/errors.hpp"
#include "schmidt/hbt.hpp"
#include "schmidt/kernel.hpp"
#include "schmidt/scenario.hpp"
#include "schmidt/spectrum.hpp"

namespace py = pybind11;
using namespace schmidt;

namespace {

py::array_t<double> to_array(std::span<const double> v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

KernelParams kernel_params(double pump_waist_um, std::optional<double> phase_matching_width_um,
                           const std::string& model) {
  KernelParams p;
  p.pump_waist_um = pump_waist_um;
  p.phase_matching_width_um = phase_matching_width_um;
  p.model = phase_matching_model_from_string(model);
  return p;
}

SamplerConfig sampler(std::size_t pulses, std::uint64_t seed, double efficiency1, double efficiency2,
                      double noise_rms, double splitting_ratio, std::size_t workers) {
  SamplerConfig c;
  c.pulses = pulses;
  c.seed = seed;
  c.arm1 = {efficiency1, noise_rms};
  c.arm2 = {efficiency2, noise_rms};
  c.splitting_ratio = splitting_ratio;
  c.workers = workers;
  return c;
}

py::dict scan_dict(const ScanResult& r) {
  py::dict rows;
  const auto column = [&](auto member) {
    std::vector<double> v;
    for (const ScanRow& row : r.rows) v.push_back(row.*member);
    return to_array(v);
  };
  rows["control"] = column(&ScanRow::control);
  rows["g2_analytic"] = column(&ScanRow::g2_analytic);
  rows["g2_montecarlo"] = column(&ScanRow::g2_montecarlo);
  rows["std_error"] = column(&ScanRow::std_error);
  rows["K_effective"] = column(&ScanRow::K_effective);
  rows["transmitted_power_fraction"] = column(&ScanRow::transmitted_power_fraction);
  py::dict out;
  out["command"] = r.command;
  out["control_name"] = r.control_name;
  out["rows"] = rows;
  out["metadata"] = r.metadata.dump();
  out["csv"] = format_scan_csv(r);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Schmidt-mode and g2 simulation of high-gain parametric down-conversion";

  static py::exception<Error> base(m, "SchmidtError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CalibrationFailed>(m, "CalibrationFailed", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<InvalidSpectrum>(m, "InvalidSpectrum", PyExc_ValueError);
  py::register_exception<InvalidGain>(m, "InvalidGain", PyExc_ValueError);

  m.def(
      "normalize",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w, double cutoff) {
        return to_array(normalize(to_vector(w), cutoff).weights());
      },
      py::arg("weights"), py::arg("relative_cutoff") = kDefaultTailCutoff,
      "Sorted weights with unit sum, tail below relative_cutoff * max dropped.");

  m.def(
      "gain_transform",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w, double gain) {
        const GainedState g = gain_transform(normalize(to_vector(w)), gain);
        py::dict out;
        out["weights"] = to_array(g.weights);
        out["total_photons"] = g.total_photons;
        out["log_total_photons"] = g.log_total_photons;
        return out;
      },
      py::arg("weights"), py::arg("gain"));

  m.def(
      "schmidt_number",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w) {
        return schmidt_number(to_vector(w));
      },
      py::arg("weights"));
  m.def("g2_auto", &g2_auto, py::arg("K"));
  m.def("g2_cross", &g2_cross, py::arg("K"), py::arg("photons_per_mode"));

  m.def(
      "tensor_spectrum",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
        return to_array(tensor_spectrum(normalize(to_vector(a)), normalize(to_vector(b))).weights());
      },
      py::arg("first"), py::arg("second"));

  m.def("double_gaussian_weights", &double_gaussian_weights, py::arg("width_ratio"), py::arg("count"));
  m.def("double_gaussian_schmidt_number", &double_gaussian_schmidt_number, py::arg("width_ratio"));

  m.def(
      "schmidt_weights",
      [](double pump_waist_um, std::optional<double> width, const std::string& model, std::size_t points) {
        return to_array(schmidt_weights(build_kernel(kernel_params(pump_waist_um, width, model), GridSpec{points, {}})));
      },
      py::arg("pump_waist_um") = 115.0, py::arg("phase_matching_width_um") = py::none(),
      py::arg("model") = "gaussian_approx", py::arg("points") = 512,
      "Schmidt weights of the transverse kernel along one axis, from its SVD.");

  m.def(
      "sample_single_beam",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w, double total_photons,
         std::size_t pulses, std::uint64_t seed, double eta1, double eta2, double noise, double split,
         std::size_t workers) {
        const auto weights = to_vector(w);
        PulseBatch b;
        {
          py::gil_scoped_release release;
          b = sample_single_beam(weights, total_photons, sampler(pulses, seed, eta1, eta2, noise, split, workers));
        }
        return py::make_tuple(to_array(b.s1), to_array(b.s2));
      },
      py::arg("weights"), py::arg("total_photons"), py::arg("pulses") = 30000, py::arg("seed") = 0,
      py::arg("efficiency1") = 1.0, py::arg("efficiency2") = 1.0, py::arg("noise_rms") = 0.0,
      py::arg("splitting_ratio") = 0.5, py::arg("workers") = 1,
      "Per-pulse detector signals (s1, s2) of one beam split onto two detectors.");

  m.def(
      "sample_twin_beams",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w, double total_photons,
         std::size_t pulses, std::uint64_t seed, double eta1, double eta2, std::size_t workers) {
        const auto weights = to_vector(w);
        TwinBatch t;
        {
          py::gil_scoped_release release;
          t = sample_twin_beams(weights, total_photons, sampler(pulses, seed, eta1, eta2, 0.0, 0.5, workers));
        }
        return py::make_tuple(to_array(t.cross.s1), to_array(t.cross.s2));
      },
      py::arg("weights"), py::arg("total_photons"), py::arg("pulses") = 30000, py::arg("seed") = 0,
      py::arg("efficiency1") = 1.0, py::arg("efficiency2") = 1.0, py::arg("workers") = 1,
      "Per-pulse detected (signal, idler) photon numbers.");

  m.def(
      "estimate_g2",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& s1,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& s2, std::size_t blocks) {
        PulseBatch b;
        b.s1 = to_vector(s1);
        b.s2 = to_vector(s2);
        const G2Estimate e = estimate_g2(b, blocks);
        return py::make_tuple(e.value, e.std_error);
      },
      py::arg("s1"), py::arg("s2"), py::arg("blocks") = kDefaultJackknifeBlocks,
      "<s1 s2> / (<s1><s2>) and its jackknife standard error.");

  m.def(
      "calibrate_gain",
      [](const std::vector<std::pair<double, double>>& points) {
        const GainCalibration c = calibrate_gain(points);
        py::dict out;
        out["coefficient"] = c.coefficient;
        out["amplitude"] = c.amplitude;
        out["fit_residual"] = c.fit_residual;
        return out;
      },
      py::arg("power_and_signal"), "Fit mean_signal = A sinh^2(c sqrt(P)) to (P, signal) pairs.");

  m.def(
      "calibrate_kernel",
      [](double target_Ks, double at_gain, double pump_waist_um, std::size_t modes_per_axis) {
        KernelParams p;
        p.pump_waist_um = pump_waist_um;
        const KernelCalibration c = calibrate_kernel(target_Ks, at_gain, p, GridSpec{}, modes_per_axis);
        py::dict out;
        out["phase_matching_width_um"] = c.fitted_width_um;
        out["achieved_Ks"] = c.achieved_Ks;
        return out;
      },
      py::arg("target_Ks"), py::arg("at_gain"), py::arg("pump_waist_um") = 115.0, py::arg("modes_per_axis") = 16);

  m.def(
      "run_scenario",
      [](const std::string& config_json, std::size_t workers) {
        const ScenarioConfig config = parse_config(nlohmann::json::parse(config_json));
        ScanResult r;
        {
          py::gil_scoped_release release;
          r = run_scan(resolve(config), RunOptions{workers});
        }
        return scan_dict(r);
      },
      py::arg("config_json"), py::arg("workers") = 1,
      "Run the scan described by a JSON scenario; returns columns, metadata and CSV text.");
}
