#pragma once

// Correlation predictions for the light behind an aperture. The transverse
// field is the tensor product of two identical 1-D axes; apertures need not be
// separable, so the coherence matrix is built on the 2-D grid.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "schmidt/kernel.hpp"
#include "schmidt/spectrum.hpp"

namespace schmidt {

enum class ApertureShape { circular, square };

std::string to_string(ApertureShape s);
ApertureShape aperture_shape_from_string(const std::string& s);

struct ApertureSpec {
  double diameter_mm = 1.0;  // side length for square apertures
  double center_x_um = 0.0;
  double center_y_um = 0.0;
  ApertureShape shape = ApertureShape::circular;
  void validate() const;
};

/// 2-D modes psi_a(x) psi_b(y) over a 1-D axis basis, ordered by low-gain
/// weight.
struct TransverseBasis {
  ModeBasis axis;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> weights;  // low-gain joint weights, sum to 1

  std::size_t size() const { return pairs.size(); }
};

/// Builds the joint basis from the first `modes_per_axis` axis modes. Joint
/// weights are the renormalized pairwise products.
TransverseBasis make_transverse(const ModeBasis& axis, std::size_t modes_per_axis,
                                double relative_cutoff = kDefaultTailCutoff);

/// Same pairs and weights over a different axis basis (e.g. after propagation).
TransverseBasis with_axis(const TransverseBasis& basis, ModeBasis axis);

/// Fractional cell coverage of the aperture on a window of grid x grid.
struct ApertureMask {
  std::size_t x_begin = 0;
  std::size_t y_begin = 0;
  Eigen::MatrixXd coverage;  // rows: x, cols: y
};

ApertureMask aperture_mask(const Grid1D& grid, const ApertureSpec& aperture);

/// Exact area of [x0, x1] x [y0, y1] inside the disc of radius r at the origin.
double disc_rectangle_overlap(double r, double x0, double x1, double y0, double y1);

/// C = N D^{1/2} O D^{1/2} with O the masked overlap matrix of the 2-D modes
/// and D the gained weights. Stored normalized by N.
struct CoherenceMatrix {
  Eigen::MatrixXcd normalized;  // C / N
  double total_photons = 0.0;   // N of the source, before the aperture

  double trace() const { return total_photons * normalized.trace().real(); }
  double transmitted_fraction() const { return normalized.trace().real(); }
};

/// `gained` must be gain_transform(basis.weights, G), index-aligned.
CoherenceMatrix coherence_matrix(const TransverseBasis& basis, const GainedState& gained,
                                 const std::optional<ApertureSpec>& aperture);

inline constexpr double kLowSignalFraction = 1e-9;

struct FilteredPrediction {
  CorrelationPrediction prediction;  // K and g2 including the temporal factor
  double spatial_schmidt_number = 1.0;
  double transmitted_fraction = 1.0;
  std::vector<double> spatial_weights;  // normalized eigenvalues of C, descending
};

/// Effective spatial weights behind the aperture, combined with a temporal
/// Schmidt number: g2 = 1 + 1 / (K_s,eff K_t).
FilteredPrediction filter_modes(const TransverseBasis& basis, const GainedState& gained,
                                const std::optional<ApertureSpec>& aperture, double temporal_K);

inline CorrelationPrediction filtered_g2(const TransverseBasis& basis, const GainedState& gained,
                                         const std::optional<ApertureSpec>& aperture,
                                         double temporal_K) {
  return filter_modes(basis, gained, aperture, temporal_K).prediction;
}

}  // namespace schmidt
