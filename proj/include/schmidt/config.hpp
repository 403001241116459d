#pragma once

// Scenario configuration: a single JSON document with units in field names.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "schmidt/coherence.hpp"
#include "schmidt/hbt.hpp"
#include "schmidt/kernel.hpp"
#include "schmidt/propagation.hpp"

namespace schmidt {

struct GainScan {
  double min = 5.8;
  double max = 8.0;
  std::size_t steps = 12;

  std::vector<double> values() const;
};

struct ApertureScan {
  std::vector<double> diameters_mm;  // sorted ascending after parsing
  std::optional<double> z_cm;        // default: focal plane
  ApertureShape shape = ApertureShape::circular;
};

struct PositionScan {
  std::vector<double> z_cm;  // sorted ascending after parsing
  std::optional<ApertureSpec> aperture;
};

struct HbtPoint {
  std::optional<double> z_cm;  // default: focal plane
  std::optional<ApertureSpec> aperture;
  bool twin_beams = false;
  bool export_pulses = false;
};

using ScanSpec = std::variant<GainScan, ApertureScan, PositionScan, HbtPoint>;

const char* scan_key(const ScanSpec& scan);

struct GainCalibrationSpec {
  std::optional<std::pair<double, double>> reference;   // (power mW, gain)
  std::vector<std::pair<double, double>> power_points;  // (power mW, mean signal)
};

struct KernelCalibrationSpec {
  double target_Ks = 6.18;
  std::optional<double> at_gain;  // default: the scenario gain
};

struct ScenarioConfig {
  KernelParams kernel;
  GridSpec grid;
  std::size_t propagation_points = kDefaultPropagationPoints;
  std::size_t modes_per_axis = 16;
  OpticalLayout layout;
  SamplerConfig sampler;
  std::size_t jackknife_blocks = kDefaultJackknifeBlocks;
  bool monte_carlo = true;
  /// Monte-Carlo mode sets are truncated once this much weight remains.
  double sampling_tail_mass = 1e-6;
  std::optional<double> gain;
  std::optional<double> pump_power_mw;
  std::optional<GainCalibrationSpec> gain_calibration;
  std::optional<KernelCalibrationSpec> kernel_calibration;
  double temporal_K = 3.1;
  ScanSpec scan = GainScan{};
};

/// Parses and validates; ConfigError carries a JSON pointer to the offending field.
ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config(const std::string& path);

/// Resolved configuration in the input format (worker count excluded).
nlohmann::json to_json(const ScenarioConfig& config);

}  // namespace schmidt
