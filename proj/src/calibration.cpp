#include "schmidt/calibration.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "schmidt/errors.hpp"
#include "schmidt/spectrum.hpp"

namespace schmidt {

double GainCalibration::gain_at(double pump_power_mw) const {
  if (!(pump_power_mw > 0.0)) throw DomainError("pump power must be positive");
  return coefficient * std::sqrt(pump_power_mw);
}

GainCalibration GainCalibration::from_reference(double pump_power_mw, double gain) {
  if (!(pump_power_mw > 0.0) || !(gain > 0.0)) {
    throw DomainError("reference power and gain must be positive");
  }
  GainCalibration c;
  c.coefficient = gain / std::sqrt(pump_power_mw);
  c.points = 1;
  return c;
}

namespace {

struct GainFit {
  double residual;
  double log_amplitude;
};

// Relative residuals r_i = A g_i - 1 with g_i = sinh^2(c sqrt(P_i)) / S_i;
// the optimal A is sum g / sum g^2. Evaluated with the largest g scaled to 1.
GainFit gain_fit(std::span<const std::pair<double, double>> pts, double c) {
  std::vector<double> lg(pts.size());
  double lmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    lg[i] = log_sinh_squared(c * std::sqrt(pts[i].first)) - std::log(pts[i].second);
    lmax = std::max(lmax, lg[i]);
  }
  double sg = 0.0, sg2 = 0.0;
  for (double& l : lg) {
    l = std::exp(l - lmax);
    sg += l;
    sg2 += l * l;
  }
  const double a = sg / sg2;
  double ss = 0.0;
  for (double g : lg) ss += (a * g - 1.0) * (a * g - 1.0);
  return {std::sqrt(ss / static_cast<double>(pts.size())), std::log(a) - lmax};
}

}  // namespace

GainCalibration calibrate_gain(std::span<const std::pair<double, double>> pts) {
  if (pts.size() < 3) {
    throw DomainError("gain calibration needs at least 3 (power, signal) points, got " +
                      std::to_string(pts.size()));
  }
  double p_max = 0.0;
  for (const auto& [p, s] : pts) {
    if (!(p > 0.0) || !(s > 0.0)) throw DomainError("calibration powers and signals must be positive");
    p_max = std::max(p_max, p);
  }

  // Keep c sqrt(P) below ~340 so sinh^2 stays representable.
  const double c_lo = 1e-4;
  const double c_hi = 340.0 / std::sqrt(p_max);
  constexpr int kGrid = 4000;
  const double step = std::log(c_hi / c_lo) / kGrid;
  int best = 0;
  double best_res = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kGrid; ++i) {
    const double r = gain_fit(pts, c_lo * std::exp(step * i)).residual;
    if (r < best_res) {
      best_res = r;
      best = i;
    }
  }
  const double lo = c_lo * std::exp(step * std::max(0, best - 1));
  const double hi = c_lo * std::exp(step * std::min(kGrid, best + 1));
  std::uintmax_t iters = 200;
  const auto [c, res] = boost::math::tools::brent_find_minima(
      [&](double cc) { return gain_fit(pts, cc).residual; }, lo, hi,
      std::numeric_limits<double>::digits / 2, iters);

  GainCalibration out;
  out.coefficient = c;
  out.fit_residual = res;
  out.amplitude = std::exp(gain_fit(pts, c).log_amplitude);
  out.points = pts.size();
  if (!(res <= kMaxGainFitResidual)) {
    throw CalibrationFailed("gain calibration did not converge: relative RMS residual " +
                                std::to_string(res) + " exceeds 20%",
                            res);
  }
  return out;
}

namespace {

double gained_K_from_axis_weights(std::span<const double> axis_weights, std::size_t modes_per_axis,
                                  double gain) {
  const double largest = axis_weights.empty() ? 0.0 : axis_weights[0];
  std::vector<double> kept;
  for (std::size_t n = 0; n < axis_weights.size() && kept.size() < modes_per_axis; ++n) {
    if (!(axis_weights[n] > 0.0) || axis_weights[n] < kDefaultTailCutoff * largest) break;
    kept.push_back(axis_weights[n]);
  }
  const auto axis = normalize(kept, 0.0);
  const auto joint = tensor_indexed(axis.weights(), axis.weights());
  std::vector<double> w;
  w.reserve(joint.size());
  for (const auto& e : joint) w.push_back(e.weight);
  return schmidt_number(gain_transform(w, gain).weights);
}

}  // namespace

double gained_spatial_schmidt_number(const KernelParams& params, const GridSpec& grid,
                                     std::size_t modes_per_axis, double gain) {
  return gained_K_from_axis_weights(schmidt_weights(build_kernel(params, grid)), modes_per_axis, gain);
}

KernelCalibration calibrate_kernel(double target_Ks, double at_gain, const KernelParams& params,
                                   const GridSpec& grid, std::size_t modes_per_axis) {
  if (!(target_Ks > 1.0)) throw DomainError("target spatial Schmidt number must be > 1");
  if (!(at_gain > 0.0)) throw InvalidGain("calibration gain must be positive");
  params.validate();

  const double sigma_p = params.pump_width_um();
  // The grid extent follows the pump on this branch, so its spacing is fixed;
  // widths narrower than kMinPointsPerWidth / 2 samples cannot be represented.
  const double extent = grid.extent_um.value_or(8.0 * sigma_p);
  const double resolvable = 0.5 * kMinPointsPerWidth * extent / static_cast<double>(grid.points);
  const double lo = std::max(sigma_p / 100.0, resolvable * (1.0 + 1e-12));
  const double hi = sigma_p;

  KernelParams trial = params;
  auto K_at = [&](double width) {
    trial.phase_matching_width_um = width;
    if (params.model == PhaseMatchingModel::gaussian_approx) {
      return gained_K_from_axis_weights(double_gaussian_weights(sigma_p / width, modes_per_axis),
                                        modes_per_axis, at_gain);
    }
    return gained_spatial_schmidt_number(trial, grid, modes_per_axis, at_gain);
  };

  const double k_max = K_at(lo);
  if (target_Ks > k_max) {
    throw CalibrationFailed("target K_s = " + std::to_string(target_Ks) +
                                " unreachable: smallest phase-matching width " + std::to_string(lo) +
                                " um gives K_s = " + std::to_string(k_max),
                            target_Ks / k_max - 1.0);
  }

  KernelCalibration out;
  out.target_Ks = target_Ks;
  out.at_gain = at_gain;
  std::uintmax_t iters = 200;
  const int bits = params.model == PhaseMatchingModel::gaussian_approx ? 45 : 20;
  const auto bracket = boost::math::tools::bisect([&](double w) { return K_at(w) - target_Ks; }, lo, hi,
                                                  boost::math::tools::eps_tolerance<double>(bits), iters);
  out.iterations = static_cast<std::size_t>(iters);
  out.fitted_width_um = 0.5 * (bracket.first + bracket.second);
  out.params = params;
  out.params.phase_matching_width_um = out.fitted_width_um;

  // Verify through the decomposition the scans use.
  out.achieved_Ks = gained_spatial_schmidt_number(out.params, grid, modes_per_axis, at_gain);
  const double miss = std::abs(out.achieved_Ks / target_Ks - 1.0);
  if (miss > kKernelCalibrationTolerance) {
    throw CalibrationFailed("kernel calibration reached K_s = " + std::to_string(out.achieved_Ks) +
                                " for target " + std::to_string(target_Ks),
                            miss);
  }
  return out;
}

}  // namespace schmidt
