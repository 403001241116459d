#pragma once

// Two-photon transverse amplitude on a 1-D grid and its Schmidt decomposition.
// The full transverse problem is the tensor product of two identical axes.

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "schmidt/spectrum.hpp"

namespace schmidt {

/// Uniform grid centred on zero: x_j = (j - points/2) * spacing, in micrometres.
struct Grid1D {
  std::size_t points = 0;
  double spacing_um = 0.0;

  double x(std::size_t j) const {
    return (static_cast<double>(j) - static_cast<double>(points / 2)) * spacing_um;
  }
  double extent_um() const { return static_cast<double>(points) * spacing_um; }
  Eigen::VectorXd coordinates() const;
};

enum class PhaseMatchingModel { gaussian_approx, sinc_exact };

std::string to_string(PhaseMatchingModel m);
PhaseMatchingModel phase_matching_model_from_string(const std::string& s);

/// Gaussian fit constant for sinc(x) ~ exp(-alpha x) on x >= 0.
inline constexpr double kSincGaussianAlpha = 0.193;

struct KernelParams {
  double pump_waist_um = 115.0;  // 1/e amplitude radius (230 um beam diameter)
  double signal_wavelength_nm = 709.0;
  double pump_wavelength_nm = 355.0;
  double crystal_length_mm = 10.0;  // effective single crystal
  double pump_refractive_index = 1.69;
  PhaseMatchingModel model = PhaseMatchingModel::gaussian_approx;
  /// Phase-matching width sigma_c. When unset it follows from the crystal
  /// length, sqrt(alpha L / k_p); calibration overrides it.
  std::optional<double> phase_matching_width_um;

  double pump_width_um() const { return pump_waist_um; }
  double phase_matching_width() const;
  void validate() const;
};

struct GridSpec {
  std::size_t points = 512;
  std::optional<double> extent_um;  // default: 8 x the larger kernel width
};

inline constexpr double kMinPointsPerWidth = 8.0;

/// Normalized amplitude A(x_s, x_i) sampled on grid x grid, with
/// sum |A|^2 dx^2 = 1.
struct BiphotonKernel {
  Grid1D grid;
  Eigen::MatrixXcd amplitude;
  KernelParams params;
  bool real_valued = true;
};

/// Closed-form per-axis Schmidt number of the double-Gaussian kernel,
/// K = (r + 1/r) / 2 with r the ratio of the two widths.
double double_gaussian_schmidt_number(double width_ratio);

/// Closed-form (Mehler) weights (1 - t) t^n, t = ((r - 1) / (r + 1))^2.
std::vector<double> double_gaussian_weights(double width_ratio, std::size_t count);

BiphotonKernel build_kernel(const KernelParams& params, const GridSpec& grid_spec = {});

enum class Plane { crystal_output, arbitrary_z };

/// Orthonormal 1-D mode functions, one per column, normalized so that
/// sum |psi|^2 dx = 1.
struct ModeBasis {
  Grid1D grid;
  Eigen::MatrixXcd modes;
  std::vector<double> weights;
  double wavelength_um = 0.709;
  Plane plane = Plane::crystal_output;
  double z_cm = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(modes.cols()); }
};

/// dx * Psi^H Psi.
Eigen::MatrixXcd gram_matrix(const ModeBasis& basis);

struct Decomposition {
  SchmidtSpectrum spectrum;
  ModeBasis signal;
  ModeBasis idler;
  /// ||A - sum s_n psi_n phi_n||_F / ||A||_F for the retained modes.
  double reconstruction_error = 0.0;
};

/// SVD of the kernel. Keeps at most max_modes modes and drops weights below
/// the relative tail cutoff; the kept weights are renormalized.
Decomposition decompose(const BiphotonKernel& kernel, std::size_t max_modes,
                        double relative_cutoff = kDefaultTailCutoff);

/// Singular values only, squared and normalized (no truncation). Cheaper
/// than decompose() when modes are not needed.
std::vector<double> schmidt_weights(const BiphotonKernel& kernel);

/// CSV: x_um, then re/im column pairs per mode.
void write_modes_csv(const ModeBasis& basis, const std::string& path);

}  // namespace schmidt
