#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "schmidt/kernel.hpp"

namespace schmidt {

/// G = c sqrt(P) with P in mW.
struct GainCalibration {
  double coefficient = 0.0;
  double amplitude = 0.0;     // A in mean_signal = A sinh^2(c sqrt(P)); 0 when fitted from a reference point
  double fit_residual = 0.0;  // relative RMS
  std::size_t points = 0;

  double gain_at(double pump_power_mw) const;

  /// Exact calibration through a single (power, gain) reference.
  static GainCalibration from_reference(double pump_power_mw, double gain);
};

inline constexpr double kMaxGainFitResidual = 0.20;

/// Least-squares fit of mean_signal = A sinh^2(c sqrt(P)) on relative
/// residuals: A in closed form, c by bounded scalar search. Needs >= 3 points.
GainCalibration calibrate_gain(std::span<const std::pair<double, double>> power_and_signal);

inline constexpr double kKernelCalibrationTolerance = 0.005;

struct KernelCalibration {
  KernelParams params;  // with phase_matching_width_um set
  double fitted_width_um = 0.0;
  double achieved_Ks = 0.0;
  double target_Ks = 0.0;
  double at_gain = 0.0;
  std::size_t iterations = 0;
};

/// The gained 2-D spatial Schmidt number for the kernel as the scans see it:
/// SVD spectrum truncated to modes_per_axis, squared into 2-D, amplified.
double gained_spatial_schmidt_number(const KernelParams& params, const GridSpec& grid,
                                     std::size_t modes_per_axis, double gain);

/// Bisection on the phase-matching width (branch sigma_c <= sigma_p) so the
/// gained 2-D spatial Schmidt number matches the target within 0.5%.
KernelCalibration calibrate_kernel(double target_Ks, double at_gain, const KernelParams& params,
                                   const GridSpec& grid, std::size_t modes_per_axis);

}  // namespace schmidt
