#pragma once

// Runnable scans over a resolved scenario and their CSV form.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "schmidt/calibration.hpp"
#include "schmidt/config.hpp"

namespace schmidt {

/// A configuration with both calibrations applied.
struct ResolvedScenario {
  ScenarioConfig config;              // kernel carries the fitted width when calibrated
  std::optional<double> gain;         // working gain; unset only for gain scans without one
  std::optional<GainCalibration> gain_calibration;
  std::optional<KernelCalibration> kernel_calibration;
};

ResolvedScenario resolve(const ScenarioConfig& config);

/// Fitted constants in metadata form.
nlohmann::json calibration_json(const ResolvedScenario& scenario);

struct ScanRow {
  double control = 0.0;
  double g2_analytic = 0.0;
  double g2_montecarlo = 0.0;  // NaN when Monte Carlo is disabled
  double std_error = 0.0;      // NaN when Monte Carlo is disabled
  double K_effective = 1.0;    // K_s,eff K_t
  double transmitted_power_fraction = 1.0;
};

struct ScanResult {
  std::string command;
  std::string control_name;
  std::vector<ScanRow> rows;
  nlohmann::json metadata;
};

struct RunOptions {
  std::size_t workers = 1;
};

ScanResult run_gain_scan(const ResolvedScenario& scenario, const RunOptions& options = {});
ScanResult run_aperture_scan(const ResolvedScenario& scenario, const RunOptions& options = {});
ScanResult run_position_scan(const ResolvedScenario& scenario, const RunOptions& options = {});

struct HbtResult {
  ScanResult scan;
  PulseBatch pulses;  // the batch behind the single row
};

/// One detection point. With twin_beams the discrete sampler runs and the
/// row carries the signal-idler cross-correlation.
HbtResult run_hbt_point(const ResolvedScenario& scenario, const RunOptions& options = {});

/// Dispatches on the scan block.
ScanResult run_scan(const ResolvedScenario& scenario, const RunOptions& options = {});

/// Mode weights handed to the Monte-Carlo sampler: the product of spatial and
/// temporal weights, truncated once `tail_mass` of weight remains.
std::vector<double> sampling_weights(std::span<const double> spatial, double temporal_K,
                                     double tail_mass);

/// Metadata timestamp: SOURCE_DATE_EPOCH when set, else the current time (UTC, ISO 8601).
std::string metadata_timestamp();

/// CSV: a "# schmidt-bench <command>" line, a "# <metadata JSON>" line, a
/// header row, then one line per row.
std::string format_scan_csv(const ScanResult& result);
void emit(const ScanResult& result, const std::string& path);

/// Parses a file written by emit(); the rows round-trip exactly.
ScanResult read_scan_csv(const std::string& path);

/// gnuplot script plotting the CSV at `csv_path`.
std::string gnuplot_script(const ScanResult& result, const std::string& csv_path);

}  // namespace schmidt
