#include "schmidt/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>

#include "schmidt/errors.hpp"

namespace schmidt {

using nlohmann::json;

std::vector<double> GainScan::values() const {
  std::vector<double> out(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    out[i] = steps == 1 ? min
                        : min + (max - min) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  if (steps > 1) out.back() = max;
  return out;
}

const char* scan_key(const ScanSpec& scan) {
  constexpr const char* keys[] = {"gain_scan", "aperture_scan", "position_scan", "hbt_point"};
  return keys[scan.index()];
}

namespace {

// Object view that records which keys were read so leftovers can be rejected.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? as_number(raw(key), at(key)) : fallback;
  }
  std::optional<double> opt_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return as_number(raw(key), at(key));
  }
  double positive(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v > 0.0)) throw ConfigError(at(key), "must be positive");
    return v;
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(at(key), "expected a non-negative integer");
    }
    return v.get<std::size_t>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& key) {
    if (!has(key)) throw ConfigError(at(key), "required");
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_number(v[i], at(key) + "/" + std::to_string(i)));
    }
    return out;
  }

  void finish(std::initializer_list<const char*> ignored = {}) const {
    for (const auto& [key, value] : j_.items()) {
      if (seen_.count(key)) continue;
      if (std::find_if(ignored.begin(), ignored.end(), [&](const char* k) { return key == k; }) !=
          ignored.end()) {
        continue;
      }
      throw ConfigError(at(key), "unknown field");
    }
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path, "must be finite");
    return d;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class Fn>
auto rethrow_as_config(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
}

ApertureSpec parse_aperture(Obj o) {
  ApertureSpec a;
  a.diameter_mm = o.positive("diameter_mm", a.diameter_mm);
  a.center_x_um = o.number("center_x_um", 0.0);
  a.center_y_um = o.number("center_y_um", 0.0);
  const std::string shape = o.string("shape", "circular");
  a.shape = rethrow_as_config(o.at("shape"), [&] { return aperture_shape_from_string(shape); });
  o.finish();
  return a;
}

std::vector<double> sorted_unique(std::vector<double> v, const std::string& path) {
  if (v.empty()) throw ConfigError(path, "must not be empty");
  std::sort(v.begin(), v.end());
  if (std::adjacent_find(v.begin(), v.end()) != v.end()) {
    throw ConfigError(path, "contains duplicate values");
  }
  return v;
}

void check_z(double z, const OpticalLayout& layout, const std::string& path) {
  constexpr double slack = 1e-9;
  if (z < layout.focal_plane_cm() - slack || z > layout.image_plane_cm() + slack) {
    throw ConfigError(path, "detection plane " + std::to_string(z) + " cm outside [" +
                                std::to_string(layout.focal_plane_cm()) + ", " +
                                std::to_string(layout.image_plane_cm()) + "] cm");
  }
}

}  // namespace

ScenarioConfig parse_config(const json& doc) {
  ScenarioConfig c;
  Obj root(doc, "");

  if (root.has("kernel")) {
    Obj k(root.raw("kernel"), "/kernel");
    KernelParams& p = c.kernel;
    p.pump_waist_um = k.positive("pump_waist_um", p.pump_waist_um);
    p.signal_wavelength_nm = k.positive("signal_wavelength_nm", p.signal_wavelength_nm);
    p.pump_wavelength_nm = k.positive("pump_wavelength_nm", p.pump_wavelength_nm);
    p.crystal_length_mm = k.positive("crystal_length_mm", p.crystal_length_mm);
    p.pump_refractive_index = k.positive("pump_refractive_index", p.pump_refractive_index);
    const std::string model = k.string("phase_matching_model", to_string(p.model));
    p.model = rethrow_as_config(k.at("phase_matching_model"),
                                [&] { return phase_matching_model_from_string(model); });
    if (k.has("phase_matching_width_um")) {
      p.phase_matching_width_um = k.positive("phase_matching_width_um", 0.0);
    }
    k.finish();
  }

  if (root.has("grid")) {
    Obj g(root.raw("grid"), "/grid");
    c.grid.points = g.count("points", c.grid.points);
    if (c.grid.points < 16) throw ConfigError(g.at("points"), "need at least 16 points");
    if (g.has("extent_um")) c.grid.extent_um = g.positive("extent_um", 0.0);
    c.propagation_points = g.count("propagation_points", c.propagation_points);
    if (c.propagation_points < c.grid.points) {
      throw ConfigError(g.at("propagation_points"), "must be at least grid.points");
    }
    c.modes_per_axis = g.count("modes_per_axis", c.modes_per_axis);
    if (c.modes_per_axis == 0) throw ConfigError(g.at("modes_per_axis"), "must be at least 1");
    g.finish();
  }

  if (root.has("layout")) {
    Obj l(root.raw("layout"), "/layout");
    c.layout.focal_length_cm = l.positive("focal_length_cm", c.layout.focal_length_cm);
    c.layout.lens_position_cm = l.positive("lens_position_cm", c.layout.lens_position_cm);
    l.finish();
  }

  if (root.has("sampler")) {
    Obj s(root.raw("sampler"), "/sampler");
    SamplerConfig& sc = c.sampler;
    sc.pulses = s.count("pulses", sc.pulses);
    if (sc.pulses < 2) throw ConfigError(s.at("pulses"), "need at least 2 pulses");
    if (s.has("seed")) {
      const json& v = s.raw("seed");
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw ConfigError(s.at("seed"), "expected an unsigned 64-bit integer");
      }
      sc.seed = v.get<std::uint64_t>();
    }
    if (s.has("detector_efficiency")) {
      const auto eta = s.numbers("detector_efficiency");
      if (eta.size() != 2) throw ConfigError(s.at("detector_efficiency"), "expected [arm1, arm2]");
      sc.arm1.efficiency = eta[0];
      sc.arm2.efficiency = eta[1];
    }
    if (s.has("electronic_noise_rms")) {
      const auto noise = s.numbers("electronic_noise_rms");
      if (noise.size() != 2) throw ConfigError(s.at("electronic_noise_rms"), "expected [arm1, arm2]");
      sc.arm1.noise_rms = noise[0];
      sc.arm2.noise_rms = noise[1];
    }
    sc.splitting_ratio = s.number("splitting_ratio", sc.splitting_ratio);
    sc.pump_jitter_rms = s.number("pump_jitter_rms", sc.pump_jitter_rms);
    c.jackknife_blocks = s.count("jackknife_blocks", c.jackknife_blocks);
    if (c.jackknife_blocks < 2) throw ConfigError(s.at("jackknife_blocks"), "need at least 2 blocks");
    c.monte_carlo = s.boolean("monte_carlo", c.monte_carlo);
    c.sampling_tail_mass = s.number("sampling_tail_mass", c.sampling_tail_mass);
    if (!(c.sampling_tail_mass >= 0.0 && c.sampling_tail_mass < 0.1)) {
      throw ConfigError(s.at("sampling_tail_mass"), "must be in [0, 0.1)");
    }
    rethrow_as_config("/sampler", [&] {
      sc.validate();
      return 0;
    });
    s.finish();
  }

  if (root.has("gain")) c.gain = root.positive("gain", 0.0);
  if (root.has("pump_power_mW")) c.pump_power_mw = root.positive("pump_power_mW", 0.0);
  if (c.gain && c.pump_power_mw) {
    throw ConfigError("/pump_power_mW", "give either gain or pump_power_mW, not both");
  }
  if (root.has("gain_calibration")) {
    Obj g(root.raw("gain_calibration"), "/gain_calibration");
    GainCalibrationSpec spec;
    if (g.has("reference_power_mW") || g.has("reference_gain")) {
      spec.reference = {g.positive("reference_power_mW", 0.0), g.positive("reference_gain", 0.0)};
      if (!(spec.reference->first > 0.0)) throw ConfigError(g.at("reference_power_mW"), "required");
      if (!(spec.reference->second > 0.0)) throw ConfigError(g.at("reference_gain"), "required");
    }
    if (g.has("power_points")) {
      const json& pts = g.raw("power_points");
      const std::string path = g.at("power_points");
      if (!pts.is_array()) throw ConfigError(path, "expected an array of [power_mW, mean_signal]");
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::string p = path + "/" + std::to_string(i);
        if (!pts[i].is_array() || pts[i].size() != 2) throw ConfigError(p, "expected [power_mW, mean_signal]");
        const double pw = Obj::as_number(pts[i][0], p + "/0");
        const double sig = Obj::as_number(pts[i][1], p + "/1");
        if (!(pw > 0.0) || !(sig > 0.0)) throw ConfigError(p, "power and signal must be positive");
        spec.power_points.emplace_back(pw, sig);
      }
      if (spec.power_points.size() < 3) throw ConfigError(path, "need at least 3 points");
    }
    if (spec.reference.has_value() == !spec.power_points.empty()) {
      throw ConfigError("/gain_calibration",
                        "give either reference_power_mW/reference_gain or power_points");
    }
    g.finish();
    c.gain_calibration = std::move(spec);
  }
  if (c.pump_power_mw && !c.gain_calibration) {
    throw ConfigError("/gain_calibration", "required when pump_power_mW is given");
  }

  if (root.has("kernel_calibration")) {
    Obj k(root.raw("kernel_calibration"), "/kernel_calibration");
    KernelCalibrationSpec spec;
    spec.target_Ks = k.number("target_Ks", spec.target_Ks);
    if (!(spec.target_Ks > 1.0)) throw ConfigError(k.at("target_Ks"), "must be > 1");
    if (k.has("at_gain")) spec.at_gain = k.positive("at_gain", 0.0);
    k.finish();
    c.kernel_calibration = spec;
  }

  c.temporal_K = root.number("temporal_K", c.temporal_K);
  if (!(c.temporal_K >= 1.0)) throw ConfigError("/temporal_K", "must be >= 1");

  int scans = 0;
  for (const char* key : {"gain_scan", "aperture_scan", "position_scan", "hbt_point"}) {
    if (root.has(key)) ++scans;
  }
  if (scans != 1) {
    throw ConfigError("", "exactly one of gain_scan, aperture_scan, position_scan, hbt_point is required");
  }
  const bool needs_gain = !root.has("gain_scan");
  if (needs_gain && !c.gain && !c.pump_power_mw) {
    throw ConfigError("/gain", "gain or pump_power_mW is required for this scan");
  }

  if (root.has("gain_scan")) {
    Obj s(root.raw("gain_scan"), "/gain_scan");
    GainScan g;
    g.min = s.positive("min", g.min);
    g.max = s.positive("max", g.max);
    g.steps = s.count("steps", g.steps);
    if (g.steps == 0) throw ConfigError(s.at("steps"), "must be at least 1");
    if (g.steps > 1 && !(g.min < g.max)) throw ConfigError(s.at("max"), "must exceed min");
    s.finish();
    c.scan = g;
  } else if (root.has("aperture_scan")) {
    Obj s(root.raw("aperture_scan"), "/aperture_scan");
    ApertureScan a;
    a.diameters_mm = sorted_unique(s.numbers("diameters_mm"), s.at("diameters_mm"));
    if (!(a.diameters_mm.front() > 0.0)) throw ConfigError(s.at("diameters_mm"), "must be positive");
    a.z_cm = s.opt_number("z_cm");
    if (a.z_cm) check_z(*a.z_cm, c.layout, s.at("z_cm"));
    const std::string shape = s.string("shape", "circular");
    a.shape = rethrow_as_config(s.at("shape"), [&] { return aperture_shape_from_string(shape); });
    s.finish();
    c.scan = a;
  } else if (root.has("position_scan")) {
    Obj s(root.raw("position_scan"), "/position_scan");
    PositionScan p;
    p.z_cm = sorted_unique(s.numbers("z_cm"), s.at("z_cm"));
    for (std::size_t i = 0; i < p.z_cm.size(); ++i) {
      check_z(p.z_cm[i], c.layout, s.at("z_cm") + "/" + std::to_string(i));
    }
    if (s.has("aperture")) p.aperture = parse_aperture(Obj(s.raw("aperture"), s.at("aperture")));
    s.finish();
    c.scan = p;
  } else {
    Obj s(root.raw("hbt_point"), "/hbt_point");
    HbtPoint h;
    h.z_cm = s.opt_number("z_cm");
    if (h.z_cm) check_z(*h.z_cm, c.layout, s.at("z_cm"));
    if (s.has("aperture")) h.aperture = parse_aperture(Obj(s.raw("aperture"), s.at("aperture")));
    h.twin_beams = s.boolean("twin_beams", false);
    h.export_pulses = s.boolean("export_pulses", false);
    s.finish();
    c.scan = h;
  }

  rethrow_as_config("/kernel", [&] {
    c.kernel.validate();
    return 0;
  });
  root.finish({"$schema", "description"});
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", "'" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

namespace {

json aperture_json(const ApertureSpec& a) {
  return {{"diameter_mm", a.diameter_mm},
          {"center_x_um", a.center_x_um},
          {"center_y_um", a.center_y_um},
          {"shape", to_string(a.shape)}};
}

}  // namespace

json to_json(const ScenarioConfig& c) {
  json j;
  json& k = j["kernel"];
  k["pump_waist_um"] = c.kernel.pump_waist_um;
  k["signal_wavelength_nm"] = c.kernel.signal_wavelength_nm;
  k["pump_wavelength_nm"] = c.kernel.pump_wavelength_nm;
  k["crystal_length_mm"] = c.kernel.crystal_length_mm;
  k["pump_refractive_index"] = c.kernel.pump_refractive_index;
  k["phase_matching_model"] = to_string(c.kernel.model);
  if (c.kernel.phase_matching_width_um) k["phase_matching_width_um"] = *c.kernel.phase_matching_width_um;

  json& g = j["grid"];
  g["points"] = c.grid.points;
  if (c.grid.extent_um) g["extent_um"] = *c.grid.extent_um;
  g["propagation_points"] = c.propagation_points;
  g["modes_per_axis"] = c.modes_per_axis;

  j["layout"] = {{"focal_length_cm", c.layout.focal_length_cm},
                 {"lens_position_cm", c.layout.lens_position_cm}};

  const SamplerConfig& s = c.sampler;
  j["sampler"] = {{"pulses", s.pulses},
                  {"seed", s.seed},
                  {"detector_efficiency", {s.arm1.efficiency, s.arm2.efficiency}},
                  {"electronic_noise_rms", {s.arm1.noise_rms, s.arm2.noise_rms}},
                  {"splitting_ratio", s.splitting_ratio},
                  {"pump_jitter_rms", s.pump_jitter_rms},
                  {"jackknife_blocks", c.jackknife_blocks},
                  {"monte_carlo", c.monte_carlo},
                  {"sampling_tail_mass", c.sampling_tail_mass}};

  if (c.gain) j["gain"] = *c.gain;
  if (c.pump_power_mw) j["pump_power_mW"] = *c.pump_power_mw;
  if (c.gain_calibration) {
    json& gc = j["gain_calibration"];
    if (c.gain_calibration->reference) {
      gc["reference_power_mW"] = c.gain_calibration->reference->first;
      gc["reference_gain"] = c.gain_calibration->reference->second;
    } else {
      gc["power_points"] = json::array();
      for (const auto& [p, sig] : c.gain_calibration->power_points) gc["power_points"].push_back({p, sig});
    }
  }
  if (c.kernel_calibration) {
    json& kc = j["kernel_calibration"];
    kc["target_Ks"] = c.kernel_calibration->target_Ks;
    if (c.kernel_calibration->at_gain) kc["at_gain"] = *c.kernel_calibration->at_gain;
  }
  j["temporal_K"] = c.temporal_K;

  std::visit(
      [&](const auto& scan) {
        using T = std::decay_t<decltype(scan)>;
        json& out = j[scan_key(c.scan)];
        if constexpr (std::is_same_v<T, GainScan>) {
          out = {{"min", scan.min}, {"max", scan.max}, {"steps", scan.steps}};
        } else if constexpr (std::is_same_v<T, ApertureScan>) {
          out = {{"diameters_mm", scan.diameters_mm}, {"shape", to_string(scan.shape)}};
          if (scan.z_cm) out["z_cm"] = *scan.z_cm;
        } else if constexpr (std::is_same_v<T, PositionScan>) {
          out = {{"z_cm", scan.z_cm}};
          if (scan.aperture) out["aperture"] = aperture_json(*scan.aperture);
        } else {
          out = {{"twin_beams", scan.twin_beams}, {"export_pulses", scan.export_pulses}};
          if (scan.z_cm) out["z_cm"] = *scan.z_cm;
          if (scan.aperture) out["aperture"] = aperture_json(*scan.aperture);
        }
      },
      c.scan);
  return j;
}

}  // namespace schmidt
