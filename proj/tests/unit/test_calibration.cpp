#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "schmidt/calibration.hpp"
#include "schmidt/errors.hpp"
#include "schmidt/kernel.hpp"

using namespace schmidt;

namespace {

std::vector<std::pair<double, double>> synthetic(double A, double c, double noise) {
  std::vector<std::pair<double, double>> pts;
  int i = 0;
  for (double P : {1.0, 2.0, 4.0, 8.0, 12.0, 16.0, 20.5}) {
    const double jitter = 1.0 + noise * ((i++ % 2) ? 1.0 : -1.0);
    pts.emplace_back(P, A * std::pow(std::sinh(c * std::sqrt(P)), 2) * jitter);
  }
  return pts;
}

// Closed-form ratio for an ungained double-Gaussian kernel with 2-D Schmidt number K.
double ratio_for(double K2d) {
  const double s = 2.0 * std::sqrt(K2d);
  return 0.5 * (s + std::sqrt(s * s - 4.0));
}

}  // namespace

TEST(GainCalibration, RecoversSyntheticCoefficient) {
  const auto pts = synthetic(3.0, 1.6, 0.0);
  const auto cal = calibrate_gain(pts);
  EXPECT_NEAR(cal.coefficient, 1.6, 1e-3);
  EXPECT_NEAR(cal.amplitude / 3.0, 1.0, 1e-2);
  EXPECT_LT(cal.fit_residual, 1e-6);
  EXPECT_EQ(cal.points, pts.size());
  EXPECT_NEAR(cal.gain_at(20.5), 1.6 * std::sqrt(20.5), 1e-2);
}

TEST(GainCalibration, ToleratesPercentNoise) {
  const auto cal = calibrate_gain(synthetic(0.5, 1.6, 0.01));
  EXPECT_NEAR(cal.coefficient, 1.6, 1e-2);
  EXPECT_LT(cal.fit_residual, 0.02);
}

TEST(GainCalibration, ReferencePoint) {
  const auto cal = GainCalibration::from_reference(20.5, 7.3);
  EXPECT_NEAR(cal.coefficient, 7.3 / std::sqrt(20.5), 1e-12);
  EXPECT_NEAR(cal.coefficient, 1.612, 1e-3);
  EXPECT_NEAR(cal.gain_at(20.5), 7.3, 1e-12);
  EXPECT_THROW(GainCalibration::from_reference(0.0, 7.3), DomainError);
}

TEST(GainCalibration, NeedsThreePoints) {
  const std::vector<std::pair<double, double>> two = {{1.0, 2.0}, {2.0, 5.0}};
  EXPECT_THROW(calibrate_gain(two), DomainError);
}

TEST(GainCalibration, RejectsDataOffTheModel) {
  const std::vector<std::pair<double, double>> falling = {
      {1.0, 100.0}, {4.0, 10.0}, {9.0, 100.0}, {16.0, 1.0}, {25.0, 50.0}};
  EXPECT_THROW(calibrate_gain(falling), CalibrationFailed);
}

TEST(KernelCalibration, HitsGainedTarget) {
  KernelParams p;
  const auto cal = calibrate_kernel(6.18, 7.3, p, GridSpec{}, 16);
  EXPECT_NEAR(cal.achieved_Ks / 6.18, 1.0, kKernelCalibrationTolerance);
  EXPECT_NEAR(gained_spatial_schmidt_number(cal.params, GridSpec{}, 16, 7.3) / 6.18, 1.0,
              kKernelCalibrationTolerance);
  EXPECT_DOUBLE_EQ(*cal.params.phase_matching_width_um, cal.fitted_width_um);
  EXPECT_LT(cal.fitted_width_um, p.pump_waist_um);
  EXPECT_NEAR(cal.fitted_width_um, 12.99, 0.1);
}

TEST(KernelCalibration, LowGainMatchesClosedForm) {
  KernelParams p;
  const auto cal = calibrate_kernel(6.18, 1e-3, p, GridSpec{}, 64);
  EXPECT_NEAR(p.pump_waist_um / cal.fitted_width_um / ratio_for(6.18), 1.0, 1e-3);
}

TEST(KernelCalibration, TargetNearOneApproachesEqualWidths) {
  KernelParams p;
  const auto cal = calibrate_kernel(1.001, 1e-3, p, GridSpec{}, 16);
  EXPECT_NEAR(p.pump_waist_um / cal.fitted_width_um / ratio_for(1.001), 1.0, 1e-3);
  EXPECT_GT(cal.fitted_width_um, 0.95 * p.pump_waist_um);
  EXPECT_LE(cal.fitted_width_um, p.pump_waist_um);
}

TEST(KernelCalibration, InvalidAndUnreachableTargets) {
  KernelParams p;
  EXPECT_THROW(calibrate_kernel(1.0, 7.3, p, GridSpec{}, 16), DomainError);
  EXPECT_THROW(calibrate_kernel(1e6, 7.3, p, GridSpec{}, 16), CalibrationFailed);
}
