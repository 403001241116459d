#include "schmidt/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "schmidt/coherence.hpp"
#include "schmidt/errors.hpp"
#include "schmidt/format.hpp"
#include "schmidt/hbt.hpp"
#include "schmidt/parallel.hpp"
#include "schmidt/philox.hpp"
#include "schmidt/propagation.hpp"
#include "schmidt/spectrum.hpp"

namespace schmidt {

using nlohmann::json;

ResolvedScenario resolve(const ScenarioConfig& config) {
  ResolvedScenario r;
  r.config = config;
  if (config.gain_calibration) {
    const auto& spec = *config.gain_calibration;
    r.gain_calibration = spec.reference
                             ? GainCalibration::from_reference(spec.reference->first, spec.reference->second)
                             : calibrate_gain(spec.power_points);
  }
  if (config.gain) {
    r.gain = config.gain;
  } else if (config.pump_power_mw) {
    r.gain = r.gain_calibration->gain_at(*config.pump_power_mw);
  }

  if (config.kernel_calibration) {
    const auto& spec = *config.kernel_calibration;
    const std::optional<double> at = spec.at_gain ? spec.at_gain : r.gain;
    if (!at) throw ConfigError("/kernel_calibration/at_gain", "required when the scenario has no gain");
    r.kernel_calibration =
        calibrate_kernel(spec.target_Ks, *at, config.kernel, config.grid, config.modes_per_axis);
    r.config.kernel = r.kernel_calibration->params;
  }
  return r;
}

json calibration_json(const ResolvedScenario& s) {
  json j = json::object();
  if (s.gain) j["gain"] = *s.gain;
  if (s.gain_calibration) {
    j["gain_coefficient_per_sqrt_mW"] = s.gain_calibration->coefficient;
    j["gain_fit_residual"] = s.gain_calibration->fit_residual;
    j["gain_fit_amplitude"] = s.gain_calibration->amplitude;
  }
  j["phase_matching_width_um"] = s.config.kernel.phase_matching_width();
  if (s.kernel_calibration) {
    j["kernel_target_Ks"] = s.kernel_calibration->target_Ks;
    j["kernel_achieved_Ks"] = s.kernel_calibration->achieved_Ks;
    j["kernel_calibration_gain"] = s.kernel_calibration->at_gain;
  }
  return j;
}

std::vector<double> sampling_weights(std::span<const double> spatial, double temporal_K,
                                     double tail_mass) {
  const SchmidtSpectrum temporal = geometric_spectrum(temporal_K);
  std::vector<double> all;
  all.reserve(spatial.size() * temporal.size());
  for (double s : spatial) {
    for (double t : temporal.weights()) {
      if (s * t > 0.0) all.push_back(s * t);
    }
  }
  if (all.empty()) throw InvalidSpectrum("no positive sampling weights");
  std::sort(all.begin(), all.end(), std::greater<>());
  double total = 0.0;
  for (auto it = all.rbegin(); it != all.rend(); ++it) total += *it;
  // Drop the smallest weights while their combined mass stays within the tail budget.
  double dropped = 0.0;
  std::size_t keep = all.size();
  while (keep > 1 && dropped + all[keep - 1] <= tail_mass * total) dropped += all[--keep];
  all.resize(keep);
  for (double& w : all) w /= total - dropped;
  return all;
}

std::string metadata_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    long long v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec == std::errc{} && ptr == end) t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

struct SpatialModel {
  TransverseBasis basis;
};

SpatialModel spatial_model(const ScenarioConfig& c) {
  const BiphotonKernel kernel = build_kernel(c.kernel, c.grid);
  const Decomposition dec = decompose(kernel, c.modes_per_axis);
  return {make_transverse(dec.signal, c.modes_per_axis)};
}

double detected_photons(double total, double fraction) {
  const double n = total * fraction;
  return std::isfinite(n) && n > 0.0 ? n : 1.0;
}

ScanResult make_result(const ResolvedScenario& s, const std::string& command,
                       const std::string& control) {
  ScanResult r;
  r.command = command;
  r.control_name = control;
  r.metadata = {{"command", command},
                {"config", to_json(s.config)},
                {"calibration", calibration_json(s)},
                {"seed", s.config.sampler.seed},
                {"timestamp", metadata_timestamp()}};
  return r;
}

void monte_carlo_row(const ScenarioConfig& c, std::size_t row_index, std::span<const double> spatial,
                     double total_photons, std::size_t workers, ScanRow& row) {
  if (!c.monte_carlo) {
    row.g2_montecarlo = std::numeric_limits<double>::quiet_NaN();
    row.std_error = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  SamplerConfig sc = c.sampler;
  sc.seed = derive_seed(c.sampler.seed, row_index);
  sc.workers = workers;
  const auto weights = sampling_weights(spatial, c.temporal_K, c.sampling_tail_mass);
  const G2Estimate est = estimate_g2(sample_single_beam(weights, total_photons, sc), c.jackknife_blocks);
  row.g2_montecarlo = est.value;
  row.std_error = est.std_error;
}

struct FilteredPoint {
  ScanRow row;
  std::vector<double> spatial_weights;
  double photons = 1.0;
};

FilteredPoint filtered_point(const TransverseBasis& basis, const GainedState& gained,
                             const std::optional<ApertureSpec>& aperture, double temporal_K,
                             double control) {
  FilteredPrediction fp = filter_modes(basis, gained, aperture, temporal_K);
  FilteredPoint p;
  p.row.control = control;
  p.row.g2_analytic = fp.prediction.g2_auto;
  p.row.K_effective = fp.prediction.schmidt_number;
  p.row.transmitted_power_fraction = fp.transmitted_fraction;
  p.spatial_weights = std::move(fp.spatial_weights);
  p.photons = detected_photons(gained.total_photons, fp.transmitted_fraction);
  return p;
}

void finish_rows(const ScenarioConfig& c, std::vector<FilteredPoint>& points, std::size_t workers,
                 ScanResult& result) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    monte_carlo_row(c, i, points[i].spatial_weights, points[i].photons, workers, points[i].row);
    result.rows.push_back(points[i].row);
  }
}

double require_gain(const ResolvedScenario& s) {
  if (!s.gain) throw ConfigError("/gain", "gain or pump_power_mW is required for this scan");
  return *s.gain;
}

}  // namespace

ScanResult run_gain_scan(const ResolvedScenario& s, const RunOptions& options) {
  const auto* scan = std::get_if<GainScan>(&s.config.scan);
  if (!scan) throw ConfigError("/gain_scan", "required for a gain scan");
  const ScenarioConfig& c = s.config;
  const SpatialModel model = spatial_model(c);

  ScanResult result = make_result(s, "scan-gain", "gain");
  const std::vector<double> gains = scan->values();
  std::vector<FilteredPoint> points(gains.size());
  parallel_for(gains.size(), options.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const GainedState g = gain_transform(model.basis.weights, gains[i]);
      const double Ks = schmidt_number(g.weights);
      FilteredPoint& p = points[i];
      p.row.control = gains[i];
      p.row.K_effective = Ks * c.temporal_K;
      p.row.g2_analytic = g2_auto(p.row.K_effective);
      p.row.transmitted_power_fraction = 1.0;
      p.spatial_weights = g.weights;
      p.photons = detected_photons(g.total_photons, 1.0);
    }
  });
  finish_rows(c, points, options.workers, result);
  return result;
}

ScanResult run_aperture_scan(const ResolvedScenario& s, const RunOptions& options) {
  const auto* scan = std::get_if<ApertureScan>(&s.config.scan);
  if (!scan) throw ConfigError("/aperture_scan", "required for an aperture scan");
  const ScenarioConfig& c = s.config;
  const double gain = require_gain(s);
  const SpatialModel model = spatial_model(c);
  const double z = scan->z_cm.value_or(c.layout.focal_plane_cm());
  const TransverseBasis basis =
      with_axis(model.basis, propagate(model.basis.axis, c.layout, z, c.propagation_points));
  const GainedState gained = gain_transform(basis.weights, gain);

  ScanResult result = make_result(s, "scan-aperture", "aperture_diameter_mm");
  std::vector<FilteredPoint> points(scan->diameters_mm.size());
  parallel_for(points.size(), options.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      ApertureSpec a;
      a.diameter_mm = scan->diameters_mm[i];
      a.shape = scan->shape;
      points[i] = filtered_point(basis, gained, a, c.temporal_K, a.diameter_mm);
    }
  });
  finish_rows(c, points, options.workers, result);
  return result;
}

ScanResult run_position_scan(const ResolvedScenario& s, const RunOptions& options) {
  const auto* scan = std::get_if<PositionScan>(&s.config.scan);
  if (!scan) throw ConfigError("/position_scan", "required for a position scan");
  const ScenarioConfig& c = s.config;
  const double gain = require_gain(s);
  const SpatialModel model = spatial_model(c);
  const Propagator propagator(model.basis.axis, c.layout, c.propagation_points);
  const GainedState gained = gain_transform(model.basis.weights, gain);

  ScanResult result = make_result(s, "scan-position", "z_cm");
  std::vector<FilteredPoint> points(scan->z_cm.size());
  parallel_for(points.size(), options.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const TransverseBasis basis = with_axis(model.basis, propagator.at(scan->z_cm[i]));
      points[i] = filtered_point(basis, gained, scan->aperture, c.temporal_K, scan->z_cm[i]);
    }
  });
  finish_rows(c, points, options.workers, result);
  return result;
}

HbtResult run_hbt_point(const ResolvedScenario& s, const RunOptions& options) {
  const auto* point = std::get_if<HbtPoint>(&s.config.scan);
  if (!point) throw ConfigError("/hbt_point", "required for an HBT point");
  const ScenarioConfig& c = s.config;
  const double gain = require_gain(s);
  const SpatialModel model = spatial_model(c);
  const double z = point->z_cm.value_or(c.layout.focal_plane_cm());
  const TransverseBasis basis =
      with_axis(model.basis, propagate(model.basis.axis, c.layout, z, c.propagation_points));
  const GainedState gained = gain_transform(basis.weights, gain);
  FilteredPoint p = filtered_point(basis, gained, point->aperture, c.temporal_K, z);

  HbtResult out;
  out.scan = make_result(s, "hbt", "z_cm");
  out.scan.metadata["correlation"] = point->twin_beams ? "signal-idler" : "auto";

  SamplerConfig sc = c.sampler;
  sc.seed = derive_seed(c.sampler.seed, 0);
  sc.workers = options.workers;
  const auto weights = sampling_weights(p.spatial_weights, c.temporal_K, c.sampling_tail_mass);
  if (point->twin_beams) {
    p.row.g2_analytic = predict(p.row.K_effective, p.photons).g2_cross;
    out.pulses = sample_twin_beams(weights, p.photons, sc).cross;
  } else {
    out.pulses = sample_single_beam(weights, p.photons, sc);
  }
  const G2Estimate est = estimate_g2(out.pulses, c.jackknife_blocks);
  p.row.g2_montecarlo = est.value;
  p.row.std_error = est.std_error;
  out.scan.rows.push_back(p.row);
  return out;
}

ScanResult run_scan(const ResolvedScenario& s, const RunOptions& options) {
  switch (s.config.scan.index()) {
    case 0: return run_gain_scan(s, options);
    case 1: return run_aperture_scan(s, options);
    case 2: return run_position_scan(s, options);
    default: return run_hbt_point(s, options).scan;
  }
}

namespace {

constexpr const char* kValueColumns[] = {"g2_analytic", "g2_montecarlo", "std_error", "K_effective",
                                         "transmitted_power_fraction"};

}  // namespace

std::string format_scan_csv(const ScanResult& r) {
  std::ostringstream out;
  out << "# schmidt-bench " << r.command << '\n';
  out << "# " << r.metadata.dump() << '\n';
  out << r.control_name;
  for (const char* col : kValueColumns) out << ',' << col;
  out << '\n';
  for (const ScanRow& row : r.rows) {
    out << format_double(row.control) << ',' << format_double(row.g2_analytic) << ','
        << format_double(row.g2_montecarlo) << ',' << format_double(row.std_error) << ','
        << format_double(row.K_effective) << ',' << format_double(row.transmitted_power_fraction) << '\n';
  }
  return out.str();
}

void emit(const ScanResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << format_scan_csv(result);
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

double parse_double(const std::string& field, const std::string& path, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw IoError(path + ":" + std::to_string(line) + ": bad number '" + field + "'");
  }
  return v;
}

}  // namespace

ScanResult read_scan_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  ScanResult r;
  std::string line;
  const std::string tag = "# schmidt-bench ";
  if (!std::getline(in, line) || line.rfind(tag, 0) != 0) throw IoError(path + ": missing tool line");
  r.command = line.substr(tag.size());
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw IoError(path + ": missing metadata line");
  try {
    r.metadata = json::parse(line.substr(2));
  } catch (const json::parse_error& e) {
    throw IoError(path + ": bad metadata: " + e.what());
  }
  if (!std::getline(in, line)) throw IoError(path + ": missing header");
  r.control_name = line.substr(0, line.find(','));
  std::size_t lineno = 3;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> v;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      v.push_back(parse_double(line.substr(start, comma - start), path, lineno));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (v.size() != 6) throw IoError(path + ":" + std::to_string(lineno) + ": expected 6 columns");
    r.rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  return r;
}

std::string gnuplot_script(const ScanResult& r, const std::string& csv_path) {
  std::ostringstream out;
  out << "set datafile separator ','\n"
      << "set key autotitle columnhead\n"
      << "set xlabel '" << r.control_name << "'\n"
      << "set ylabel 'g2'\n"
      << "set grid\n"
      << "plot '" << csv_path << "' using 1:2 with linespoints title 'analytic', \\\n"
      << "     '' using 1:3:4 with yerrorbars title 'Monte Carlo'\n";
  return out.str();
}

}  // namespace schmidt
