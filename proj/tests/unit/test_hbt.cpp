#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "schmidt/errors.hpp"
#include "schmidt/hbt.hpp"
#include "schmidt/philox.hpp"

using namespace schmidt;

namespace {

SamplerConfig config(std::size_t pulses, std::uint64_t seed) {
  SamplerConfig c;
  c.pulses = pulses;
  c.seed = seed;
  return c;
}

std::vector<double> flat(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

}  // namespace

TEST(SamplerConfig, Validation) {
  SamplerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.pulses = 1;
  EXPECT_THROW(c.validate(), DomainError);
  c = SamplerConfig{};
  c.arm1.efficiency = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = SamplerConfig{};
  c.splitting_ratio = 1.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = SamplerConfig{};
  c.arm2.noise_rms = -1.0;
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(SingleBeam, SingleModeIsThermal) {
  const auto est = estimate_g2(sample_single_beam({{1.0}}, 100.0, config(200000, 1)));
  EXPECT_NEAR(est.value, 2.0, 3.0 * est.std_error);
  EXPECT_NEAR(est.std_error, 2.0 / std::sqrt(200000.0), 0.002);
}

TEST(SingleBeam, TwoEqualModes) {
  const auto est = estimate_g2(sample_single_beam(flat(2), 100.0, config(200000, 2)));
  EXPECT_NEAR(est.value, 1.5, 3.0 * est.std_error);
}

TEST(SingleBeam, MeanSignalFollowsPhotonNumberAndSplit) {
  SamplerConfig c = config(200000, 3);
  c.splitting_ratio = 0.3;
  c.arm2.efficiency = 0.5;
  const auto batch = sample_single_beam(flat(10), 1000.0, c);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    m1 += batch.s1[i];
    m2 += batch.s2[i];
  }
  m1 /= static_cast<double>(batch.size());
  m2 /= static_cast<double>(batch.size());
  // Relative standard deviation of the mean is 1/sqrt(K n).
  const double tol = 5.0 / std::sqrt(10.0 * 200000.0);
  EXPECT_NEAR(m1 / 300.0, 1.0, tol);
  EXPECT_NEAR(m2 / 350.0, 1.0, tol);
  EXPECT_EQ(batch.mode_count, 10u);
}

TEST(SingleBeam, DetectionLossLeavesG2Unchanged) {
  const std::vector<double> w = {0.5, 0.3, 0.2};
  SamplerConfig lossy = config(200000, 4);
  lossy.arm1.efficiency = lossy.arm2.efficiency = 0.3;
  const auto a = estimate_g2(sample_single_beam(w, 500.0, config(200000, 4)));
  const auto b = estimate_g2(sample_single_beam(w, 500.0, lossy));
  EXPECT_NEAR(a.value, b.value, 3.0 * std::hypot(a.std_error, b.std_error));
}

TEST(SingleBeam, PumpJitterAddsExcessCorrelation) {
  SamplerConfig c = config(400000, 5);
  c.pump_jitter_rms = 0.1;
  const auto est = estimate_g2(sample_single_beam(flat(20), 100.0, c));
  // <I^2>/<I>^2 picks up the factor (1 + s^2) of the multiplicative jitter.
  EXPECT_NEAR(est.value, (1.0 + 1.0 / 20.0) * 1.01, 4.0 * est.std_error);
}

TEST(SingleBeam, IndependentOfWorkerCount) {
  SamplerConfig c = config(5000, 6);
  c.arm1.noise_rms = 2.0;
  c.pump_jitter_rms = 0.05;
  const std::vector<double> w = {0.4, 0.3, 0.2, 0.1};
  const auto ref = sample_single_beam(w, 50.0, c);
  for (std::size_t workers : {2u, 3u, 8u}) {
    c.workers = workers;
    const auto b = sample_single_beam(w, 50.0, c);
    EXPECT_EQ(b.s1, ref.s1);
    EXPECT_EQ(b.s2, ref.s2);
  }
}

TEST(SingleBeam, InvalidInputs) {
  EXPECT_THROW(sample_single_beam({}, 1.0, config(10, 1)), InvalidSpectrum);
  EXPECT_THROW(sample_single_beam(flat(2), 0.0, config(10, 1)), DomainError);
  EXPECT_THROW(sample_single_beam({{0.5, -0.5}}, 1.0, config(10, 1)), InvalidSpectrum);
}

TEST(TwinBeams, CrossCorrelationExamples) {
  struct Case {
    std::vector<double> weights;
    double total;
    double expected;
  };
  const Case cases[] = {
      {{1.0}, 1.0, 3.0},
      {{1.0}, 1000.0, 2.001},
      {flat(20), 1000.0, 1.0 + 1.0 / 20.0 + 1.0 / 1000.0},
  };
  std::uint64_t seed = 10;
  for (const Case& c : cases) {
    const auto twin = sample_twin_beams(c.weights, c.total, config(1000000, seed++));
    const auto est = estimate_g2(twin.cross);
    EXPECT_NEAR(est.value, c.expected, 3.0 * est.std_error) << c.expected;
  }
}

TEST(TwinBeams, SignalArmsSeeThermalAutoCorrelation) {
  // Binomial splitting of a thermal photon number: g2 = 1 + 1/K without the shot term.
  const auto twin = sample_twin_beams(flat(4), 400.0, config(400000, 20));
  const auto est = estimate_g2(twin.signal_arms);
  EXPECT_NEAR(est.value, 1.25, 3.0 * est.std_error);
}

TEST(TwinBeams, LossyArmsKeepCrossCorrelation) {
  SamplerConfig c = config(400000, 21);
  c.arm1.efficiency = 0.4;
  c.arm2.efficiency = 0.7;
  const auto est = estimate_g2(sample_twin_beams(flat(5), 50.0, c).cross);
  EXPECT_NEAR(est.value, 1.0 + 1.0 / 5.0 + 1.0 / 50.0, 3.0 * est.std_error);
}

TEST(TwinBeams, IndependentOfWorkerCount) {
  SamplerConfig c = config(4000, 22);
  c.arm1.efficiency = 0.8;
  const auto ref = sample_twin_beams(flat(6), 60.0, c);
  c.workers = 5;
  const auto b = sample_twin_beams(flat(6), 60.0, c);
  EXPECT_EQ(b.cross.s1, ref.cross.s1);
  EXPECT_EQ(b.cross.s2, ref.cross.s2);
  EXPECT_EQ(b.signal_arms.s1, ref.signal_arms.s1);
}

TEST(TwinBeams, OverflowGuard) {
  EXPECT_THROW(sample_twin_beams({{1.0}}, 4.0e9, config(10, 1)), OverflowGuard);
}

TEST(Estimator, ConstantSignals) {
  PulseBatch b;
  b.s1.assign(1000, 3.0);
  b.s2.assign(1000, 3.0);
  const auto est = estimate_g2(b);
  EXPECT_DOUBLE_EQ(est.value, 1.0);
  EXPECT_NEAR(est.std_error, 0.0, 1e-14);
  EXPECT_EQ(est.pulses_used, 1000u);
}

TEST(Estimator, AntiCorrelatedPair) {
  PulseBatch b;
  b.s1 = {2.0, 0.0};
  b.s2 = {0.0, 2.0};
  const auto est = estimate_g2(b);
  EXPECT_EQ(est.value, 0.0);
  EXPECT_GE(est.std_error, 0.0);
}

TEST(Estimator, DegenerateBatches) {
  PulseBatch b;
  b.s1 = {0.0, 0.0, 0.0};
  b.s2 = {1.0, 2.0, 3.0};
  EXPECT_THROW(estimate_g2(b), DegenerateBatch);
  b.s1 = {1.0};
  b.s2 = {1.0};
  EXPECT_THROW(estimate_g2(b), DegenerateBatch);
  b.s1 = {1.0, 2.0};
  b.s2 = {1.0};
  EXPECT_THROW(estimate_g2(b), DegenerateBatch);
}

TEST(Estimator, ExponentialOracle) {
  // Identical exponential arms: <I^2>/<I>^2 = 2.
  const PhiloxKey key = philox_key(99);
  PulseBatch b;
  const std::size_t n = 1000000;
  b.s1.resize(n);
  for (std::size_t i = 0; i < n; ++i) b.s1[i] = -std::log(to_open_unit(philox_block(key, i, 1, 0).first));
  b.s2 = b.s1;
  const auto est = estimate_g2(b);
  EXPECT_NEAR(est.value, 2.0, 3.0 * est.std_error);
}

TEST(Estimator, StdErrorHalvesWithFourTimesThePulses) {
  double small = 0.0, large = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    small += estimate_g2(sample_single_beam(flat(3), 10.0, config(25000, 100 + seed))).std_error;
    large += estimate_g2(sample_single_beam(flat(3), 10.0, config(100000, 200 + seed))).std_error;
  }
  EXPECT_NEAR(small / large, 2.0, 0.4);
}

TEST(Detector, ResponseExamples) {
  EXPECT_EQ(detector_response(100.0, {1.0, 0.0}, 0.7), 100.0);
  EXPECT_EQ(detector_response(100.0, {0.5, 0.0}, -1.3), 50.0);
  EXPECT_EQ(detector_response(0.0, {1.0, 1.0}, -2.0), 0.0);
}

TEST(Detector, ClampedNoiseHasHalfNormalMean) {
  const PhiloxKey key = philox_key(5);
  const std::size_t n = 1000000;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = detector_response(0.0, {1.0, 1.0}, standard_normal(philox_block(key, i, 2, 0)));
    ASSERT_GE(r, 0.0);
    sum += r;
  }
  // E[max(0, Z)] = 1 / sqrt(2 pi); sd of max(0, Z) is ~0.584.
  EXPECT_NEAR(sum / static_cast<double>(n), 0.398942, 5.0 * 0.584 / std::sqrt(static_cast<double>(n)));
}

TEST(PulseCsv, HeaderAndRows) {
  PulseBatch b;
  b.s1 = {1.5, 2.0};
  b.s2 = {0.25, 3.0};
  const auto path = (std::filesystem::temp_directory_path() / "schmidt_pulses_test.csv").string();
  write_pulse_csv(b, path, R"({"seed":1})");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, R"(# {"seed":1})");
  std::getline(in, line);
  EXPECT_EQ(line, "s1,s2");
  std::getline(in, line);
  EXPECT_EQ(line, "1.5,0.25");
  std::getline(in, line);
  EXPECT_EQ(line, "2,3");
  std::filesystem::remove(path);
}
