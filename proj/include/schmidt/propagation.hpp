#pragma once

// Paraxial propagation of 1-D mode functions through the 2f-2f lens layout:
// free space to the lens, thin-lens phase, free space to the detection plane.
// Free-space steps use the band-limited angular-spectrum method.

#include <Eigen/Dense>
#include <cstddef>
#include <memory>

#include "schmidt/kernel.hpp"

namespace schmidt {

struct OpticalLayout {
  double focal_length_cm = 15.0;
  double lens_position_cm = 30.0;  // from the crystal output

  /// Detection planes run from the focal plane to the image plane.
  double focal_plane_cm() const { return lens_position_cm + focal_length_cm; }
  double image_plane_cm() const { return lens_position_cm + 2.0 * focal_length_cm; }
  void validate() const;
};

inline constexpr std::size_t kDefaultPropagationPoints = 16384;
inline constexpr double kAliasingThreshold = 1e-4;

/// Owns FFTW plans and buffers for one transform length.
class Fft1D {
 public:
  explicit Fft1D(std::size_t n);
  ~Fft1D();
  Fft1D(const Fft1D&) = delete;
  Fft1D& operator=(const Fft1D&) = delete;

  std::size_t size() const { return n_; }
  /// In-place unnormalized forward (e^{-i}) / backward (e^{+i}) transforms.
  void forward(Eigen::Ref<Eigen::VectorXcd> data);
  void backward(Eigen::Ref<Eigen::VectorXcd> data);

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

/// Propagates a crystal-output basis to detection planes. The lens-plane
/// fields are computed once at construction.
class Propagator {
 public:
  Propagator(const ModeBasis& crystal_output, const OpticalLayout& layout,
             std::size_t points = kDefaultPropagationPoints);

  ModeBasis at(double z_detect_cm) const;

  const Grid1D& grid() const { return grid_; }
  const OpticalLayout& layout() const { return layout_; }

 private:
  void free_space(Fft1D& fft, Eigen::MatrixXcd& fields, double distance_um,
                  const char* stage) const;

  OpticalLayout layout_;
  Grid1D grid_;
  double wavelength_um_;
  std::vector<double> weights_;
  Eigen::MatrixXcd after_lens_;
};

/// One-shot form of Propagator::at.
ModeBasis propagate(const ModeBasis& basis, const OpticalLayout& layout, double z_detect_cm,
                    std::size_t points = kDefaultPropagationPoints);

/// Zero-pads (centred) a basis onto a larger grid with the same spacing.
ModeBasis embed(const ModeBasis& basis, std::size_t points);

/// Fraction of each mode's energy in the outer two samples on either side;
/// returns the maximum over modes.
double boundary_energy_fraction(const Eigen::MatrixXcd& fields);

}  // namespace schmidt
