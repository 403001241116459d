#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "schmidt/config.hpp"
#include "schmidt/errors.hpp"
#include "schmidt/parallel.hpp"
#include "schmidt/scenario.hpp"
#include "schmidt/spectrum.hpp"

using namespace schmidt;
using nlohmann::json;

namespace {

json base() {
  return json::parse(R"({
    "kernel": {"pump_waist_um": 115.0, "phase_matching_width_um": 12.99},
    "grid": {"points": 512, "propagation_points": 16384, "modes_per_axis": 16},
    "sampler": {"pulses": 2000, "seed": 7},
    "temporal_K": 3.1,
    "gain_scan": {"min": 5.8, "max": 8.0, "steps": 4}
  })");
}

std::string path_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<accepted>";
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Config, ParsesAndFillsDefaults) {
  const ScenarioConfig c = parse_config(base());
  EXPECT_EQ(c.grid.points, 512u);
  EXPECT_EQ(c.sampler.pulses, 2000u);
  EXPECT_EQ(c.sampler.seed, 7u);
  EXPECT_DOUBLE_EQ(*c.kernel.phase_matching_width_um, 12.99);
  EXPECT_DOUBLE_EQ(c.layout.focal_length_cm, 15.0);
  ASSERT_EQ(c.scan.index(), 0u);
  EXPECT_EQ(std::get<GainScan>(c.scan).values().size(), 4u);
  EXPECT_DOUBLE_EQ(std::get<GainScan>(c.scan).values().back(), 8.0);
}

TEST(Config, ErrorsCarryFieldPaths) {
  json j = base();
  j["kernel"]["pump_wasit_um"] = 100.0;
  EXPECT_EQ(path_of(j), "/kernel/pump_wasit_um");

  j = base();
  j["colour"] = "blue";
  EXPECT_EQ(path_of(j), "/colour");

  j = base();
  j["grid"]["points"] = 8;
  EXPECT_EQ(path_of(j), "/grid/points");

  j = base();
  j["sampler"]["pulses"] = -5;
  EXPECT_EQ(path_of(j), "/sampler/pulses");

  j = base();
  j["temporal_K"] = 0.5;
  EXPECT_EQ(path_of(j), "/temporal_K");

  j = base();
  j["kernel"]["phase_matching_model"] = "tophat";
  EXPECT_EQ(path_of(j), "/kernel/phase_matching_model");
}

TEST(Config, ScanBlockRules) {
  json j = base();
  j["aperture_scan"] = {{"diameters_mm", {0.1, 0.2}}};
  EXPECT_EQ(path_of(j), "");

  j = base();
  j.erase("gain_scan");
  j["position_scan"] = {{"z_cm", {50.0}}};
  EXPECT_EQ(path_of(j), "/gain");

  j["gain"] = 7.3;
  j["position_scan"]["z_cm"] = {44.0};
  EXPECT_EQ(path_of(j).rfind("/position_scan/z_cm", 0), 0u);

  j["position_scan"]["z_cm"] = {55.0, 50.0, 50.0};
  EXPECT_EQ(path_of(j).rfind("/position_scan/z_cm", 0), 0u);

  j["position_scan"]["z_cm"] = {55.0, 50.0};
  const ScenarioConfig c = parse_config(j);
  EXPECT_EQ(std::get<PositionScan>(c.scan).z_cm, (std::vector<double>{50.0, 55.0}));
}

TEST(Config, GainSources) {
  json j = base();
  j["gain"] = 7.3;
  j["pump_power_mW"] = 20.5;
  EXPECT_EQ(path_of(j), "/pump_power_mW");

  j.erase("gain");
  EXPECT_EQ(path_of(j), "/gain_calibration");

  j["gain_calibration"] = {{"power_points", {{1.0, 2.0}, {2.0, 5.0}}}};
  EXPECT_EQ(path_of(j), "/gain_calibration/power_points");
}

TEST(Config, ResolvedFormRoundTrips) {
  json j = base();
  j["sampler"]["detector_efficiency"] = {0.8, 0.6};
  j["kernel_calibration"] = {{"target_Ks", 6.18}, {"at_gain", 7.3}};
  const json once = to_json(parse_config(j));
  EXPECT_EQ(to_json(parse_config(once)), once);
}

TEST(Config, LoadErrorsAreConfigErrors) {
  EXPECT_THROW(load_config(temp_path("schmidt_missing_config.json")), ConfigError);
  const std::string bad = temp_path("schmidt_bad_config.json");
  std::ofstream(bad) << "{ not json";
  EXPECT_THROW(load_config(bad), ConfigError);
  std::filesystem::remove(bad);
}

TEST(Scenario, ResolveAppliesCalibrations) {
  json j = base();
  j["pump_power_mW"] = 20.5;
  j["gain_calibration"] = {{"reference_power_mW", 20.5}, {"reference_gain", 7.3}};
  j["kernel_calibration"] = {{"target_Ks", 6.18}};
  j["kernel"].erase("phase_matching_width_um");
  const ResolvedScenario r = resolve(parse_config(j));
  ASSERT_TRUE(r.gain.has_value());
  EXPECT_NEAR(*r.gain, 7.3, 1e-12);
  ASSERT_TRUE(r.kernel_calibration.has_value());
  EXPECT_NEAR(r.kernel_calibration->achieved_Ks / 6.18, 1.0, kKernelCalibrationTolerance);
  EXPECT_DOUBLE_EQ(*r.config.kernel.phase_matching_width_um, r.kernel_calibration->fitted_width_um);
  const json cal = calibration_json(r);
  EXPECT_NEAR(cal.at("gain").get<double>(), 7.3, 1e-12);
}

TEST(Scenario, GainScanRowsAreBoundedAndIncreasing) {
  json j = base();
  j["sampler"]["monte_carlo"] = false;
  const ScanResult r = run_scan(resolve(parse_config(j)));
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_EQ(r.control_name, "gain");
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_GT(r.rows[i].g2_analytic, 1.0);
    EXPECT_LE(r.rows[i].g2_analytic, 2.0);
    EXPECT_TRUE(std::isnan(r.rows[i].g2_montecarlo));
    EXPECT_NEAR(r.rows[i].g2_analytic, 1.0 + 1.0 / r.rows[i].K_effective, 1e-12);
    if (i > 0) EXPECT_GT(r.rows[i].g2_analytic, r.rows[i - 1].g2_analytic);
  }
}

TEST(Scenario, SingleSpatialModeGivesFlatScan) {
  json j = base();
  j["kernel"]["phase_matching_width_um"] = 115.0;
  j["sampler"]["monte_carlo"] = false;
  j["gain"] = 7.3;
  j.erase("gain_scan");
  j["position_scan"] = {{"z_cm", {45.0, 50.0, 55.0, 60.0}}, {"aperture", {{"diameter_mm", 0.5}}}};
  const ScanResult r = run_scan(resolve(parse_config(j)));
  for (const ScanRow& row : r.rows) EXPECT_NEAR(row.g2_analytic, 1.0 + 1.0 / 3.1, 1e-9);
}

TEST(Scenario, SamplingWeightsKeepAllButTheTail) {
  const auto spatial = geometric_spectrum(6.0);
  const auto w = sampling_weights(spatial.weights(), 3.1, 1e-6);
  double s = 0.0;
  for (double x : w) s += x;
  EXPECT_GT(s, 1.0 - 1e-6 - 1e-12);
  EXPECT_LE(s, 1.0 + 1e-12);
  for (std::size_t i = 1; i < w.size(); ++i) EXPECT_GE(w[i - 1], w[i]);
  EXPECT_EQ(sampling_weights(std::vector<double>{1.0}, 1.0, 1e-6).size(), 1u);
}

TEST(Scenario, CsvIsByteIdenticalAcrossWorkers) {
  setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  const ResolvedScenario s = resolve(parse_config(base()));
  const std::string one = format_scan_csv(run_scan(s, RunOptions{1}));
  const std::string four = format_scan_csv(run_scan(s, RunOptions{4}));
  EXPECT_EQ(one, four);
  EXPECT_NE(one.find("2023-11-14T22:13:20Z"), std::string::npos);
  unsetenv("SOURCE_DATE_EPOCH");
}

TEST(Scenario, CsvRoundTrip) {
  json j = base();
  j["gain_scan"]["steps"] = 2;
  const ScanResult r = run_scan(resolve(parse_config(j)));
  const std::string path = temp_path("schmidt_scan_roundtrip.csv");
  emit(r, path);
  const ScanResult back = read_scan_csv(path);
  EXPECT_EQ(back.command, r.command);
  EXPECT_EQ(back.control_name, r.control_name);
  ASSERT_EQ(back.rows.size(), r.rows.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].control, r.rows[i].control);
    EXPECT_EQ(back.rows[i].g2_analytic, r.rows[i].g2_analytic);
    EXPECT_EQ(back.rows[i].g2_montecarlo, r.rows[i].g2_montecarlo);
    EXPECT_EQ(back.rows[i].std_error, r.rows[i].std_error);
  }
  std::filesystem::remove(path);

  ScanResult empty;
  empty.command = "scan-gain";
  empty.control_name = "gain";
  empty.metadata = json::object();
  emit(empty, path);
  EXPECT_TRUE(read_scan_csv(path).rows.empty());
  std::filesystem::remove(path);
}

TEST(Scenario, HbtPointTwinBeams) {
  json j = base();
  j.erase("gain_scan");
  j["gain"] = 7.3;
  j["sampler"]["pulses"] = 20000;
  j["hbt_point"] = {{"twin_beams", true}};
  const HbtResult r = run_hbt_point(resolve(parse_config(j)));
  ASSERT_EQ(r.scan.rows.size(), 1u);
  const ScanRow& row = r.scan.rows[0];
  EXPECT_GT(row.g2_analytic, 1.0 + 1.0 / row.K_effective);
  EXPECT_NEAR(row.g2_montecarlo, row.g2_analytic, 4.0 * row.std_error);
  EXPECT_EQ(r.pulses.size(), 20000u);
  EXPECT_EQ(r.scan.metadata.at("correlation"), "signal-idler");
}

#ifdef SCHMIDT_BENCH_CLI
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SCHMIDT_BENCH_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  json j = base();
  j["sampler"]["monte_carlo"] = false;
  const std::string cfg = temp_path("schmidt_cli_config.json");
  std::ofstream(cfg) << j.dump();
  EXPECT_EQ(run_cli("scan-gain --config " + cfg), 0);
  EXPECT_EQ(run_cli("scan-aperture --config " + cfg), 2);
  EXPECT_EQ(run_cli("scan-gain --config " + temp_path("schmidt_no_such_file.json")), 2);
  EXPECT_EQ(run_cli("scan-gain --config " + cfg + " --pulses 1"), 2);
  EXPECT_EQ(run_cli("frobnicate --config " + cfg), 2);

  j["kernel_calibration"] = {{"target_Ks", 1e6}, {"at_gain", 7.3}};
  std::ofstream(cfg) << j.dump();
  EXPECT_EQ(run_cli("calibrate --config " + cfg), 3);
  std::filesystem::remove(cfg);
}

TEST(Cli, WritesCsvAndGnuplotScript) {
  json j = base();
  j["sampler"]["monte_carlo"] = false;
  const std::string cfg = temp_path("schmidt_cli_config2.json");
  const std::string out = temp_path("schmidt_cli_out.csv");
  std::ofstream(cfg) << j.dump();
  ASSERT_EQ(run_cli("scan-gain --config " + cfg + " --out " + out + " --gnuplot"), 0);
  EXPECT_EQ(read_scan_csv(out).rows.size(), 4u);
  EXPECT_TRUE(std::filesystem::exists(temp_path("schmidt_cli_out.gp")));
  std::filesystem::remove(cfg);
  std::filesystem::remove(out);
  std::filesystem::remove(temp_path("schmidt_cli_out.gp"));
}
#endif

TEST(Workers, EnvironmentDefault) {
  setenv("SCHMIDT_BENCH_WORKERS", "3", 1);
  EXPECT_EQ(default_workers(), 3u);
  setenv("SCHMIDT_BENCH_WORKERS", "zero", 1);
  EXPECT_GE(default_workers(), 1u);
  setenv("SCHMIDT_BENCH_WORKERS", "0", 1);
  EXPECT_GE(default_workers(), 1u);
  unsetenv("SCHMIDT_BENCH_WORKERS");
  EXPECT_GE(default_workers(), 1u);
}

TEST(Workers, ParallelForCoversEveryIndexOnce) {
  for (std::size_t workers : {1u, 2u, 7u, 64u}) {
    std::vector<int> hits(50, 0);
    parallel_for(hits.size(), workers, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 50) << workers;
  }
}
