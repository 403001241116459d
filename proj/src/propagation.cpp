#include "schmidt/propagation.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>
#include <numbers>

#include "schmidt/errors.hpp"

namespace schmidt {

using cd = std::complex<double>;

namespace {
// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Fft1D::Impl {
  fftw_complex* buffer = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

Fft1D::Fft1D(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  std::lock_guard lock(planner_mutex());
  impl_->buffer = fftw_alloc_complex(n);
  if (impl_->buffer == nullptr) throw ComputationError("FFTW buffer allocation failed");
  const int len = static_cast<int>(n);
  // FFTW_ESTIMATE picks the same algorithm every time, keeping results reproducible.
  impl_->forward = fftw_plan_dft_1d(len, impl_->buffer, impl_->buffer, FFTW_FORWARD, FFTW_ESTIMATE);
  impl_->backward = fftw_plan_dft_1d(len, impl_->buffer, impl_->buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (impl_->forward == nullptr || impl_->backward == nullptr) {
    throw ComputationError("FFTW planning failed");
  }
}

Fft1D::~Fft1D() {
  std::lock_guard lock(planner_mutex());
  if (impl_->forward) fftw_destroy_plan(impl_->forward);
  if (impl_->backward) fftw_destroy_plan(impl_->backward);
  if (impl_->buffer) fftw_free(impl_->buffer);
}

void Fft1D::forward(Eigen::Ref<Eigen::VectorXcd> data) {
  std::memcpy(impl_->buffer, data.data(), n_ * sizeof(fftw_complex));
  fftw_execute(impl_->forward);
  std::memcpy(static_cast<void*>(data.data()), impl_->buffer, n_ * sizeof(fftw_complex));
}

void Fft1D::backward(Eigen::Ref<Eigen::VectorXcd> data) {
  std::memcpy(impl_->buffer, data.data(), n_ * sizeof(fftw_complex));
  fftw_execute(impl_->backward);
  std::memcpy(static_cast<void*>(data.data()), impl_->buffer, n_ * sizeof(fftw_complex));
}

void OpticalLayout::validate() const {
  if (!(focal_length_cm > 0.0)) throw DomainError("focal length must be positive");
  if (!(lens_position_cm > 0.0)) throw DomainError("lens position must be positive");
}

ModeBasis embed(const ModeBasis& basis, std::size_t points) {
  if (points < basis.grid.points) throw DomainError("cannot embed onto a smaller grid");
  ModeBasis out = basis;
  out.grid.points = points;
  out.modes = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(points), basis.modes.cols());
  const auto offset = static_cast<Eigen::Index>(points / 2 - basis.grid.points / 2);
  out.modes.middleRows(offset, basis.modes.rows()) = basis.modes;
  return out;
}

double boundary_energy_fraction(const Eigen::MatrixXcd& fields) {
  const Eigen::Index n = fields.rows();
  const Eigen::Index edge = std::min<Eigen::Index>(2, n / 2);
  double worst = 0.0;
  for (Eigen::Index c = 0; c < fields.cols(); ++c) {
    const double total = fields.col(c).squaredNorm();
    if (!(total > 0.0)) continue;
    const double outer = fields.col(c).head(edge).squaredNorm() + fields.col(c).tail(edge).squaredNorm();
    worst = std::max(worst, outer / total);
  }
  return worst;
}

Propagator::Propagator(const ModeBasis& crystal_output, const OpticalLayout& layout,
                       std::size_t points)
    : layout_(layout), wavelength_um_(crystal_output.wavelength_um), weights_(crystal_output.weights) {
  layout_.validate();
  if (crystal_output.plane != Plane::crystal_output) {
    throw DomainError("propagation starts from the crystal output plane");
  }
  const ModeBasis padded = embed(crystal_output, std::max(points, crystal_output.grid.points));
  grid_ = padded.grid;
  after_lens_ = padded.modes;

  Fft1D fft(grid_.points);
  free_space(fft, after_lens_, layout_.lens_position_cm * 1e4, "crystal to lens");

  const double k = 2.0 * std::numbers::pi / wavelength_um_;
  const double f_um = layout_.focal_length_cm * 1e4;
  for (Eigen::Index j = 0; j < after_lens_.rows(); ++j) {
    const double x = grid_.x(static_cast<std::size_t>(j));
    after_lens_.row(j) *= std::polar(1.0, -k * x * x / (2.0 * f_um));
  }
}

void Propagator::free_space(Fft1D& fft, Eigen::MatrixXcd& fields, double distance_um,
                            const char* stage) const {
  const auto n = static_cast<Eigen::Index>(grid_.points);
  const double length = grid_.extent_um();
  const double df = 1.0 / length;
  // Band limit for a sampled transfer function (Matsushima & Shimobaba).
  const double f_limit = 1.0 / (wavelength_um_ * std::hypot(2.0 * df * distance_um, 1.0));

  Eigen::VectorXcd transfer(n);
  std::vector<bool> passed(static_cast<std::size_t>(n));
  for (Eigen::Index m = 0; m < n; ++m) {
    const Eigen::Index signed_m = m < n / 2 ? m : m - n;
    const double fx = static_cast<double>(signed_m) * df;
    const bool ok = std::abs(fx) <= f_limit;
    passed[static_cast<std::size_t>(m)] = ok;
    const double phase = -std::numbers::pi * wavelength_um_ * distance_um * fx * fx;
    transfer[m] = ok ? std::polar(1.0, phase) : cd{0.0, 0.0};
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXcd work(n);
  for (Eigen::Index c = 0; c < fields.cols(); ++c) {
    work = fields.col(c);
    fft.forward(work);
    const double total = work.squaredNorm();
    double cut = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
      if (!passed[static_cast<std::size_t>(m)]) cut += std::norm(work[m]);
    }
    if (total > 0.0 && cut > kAliasingThreshold * total) {
      throw AliasingError(std::string(stage) + ": mode " + std::to_string(c) +
                          " has spectral energy beyond the transfer-function band limit");
    }
    work = work.cwiseProduct(transfer);
    fft.backward(work);
    fields.col(c) = work * inv_n;
  }
  const double edge = boundary_energy_fraction(fields);
  if (edge > kAliasingThreshold) {
    throw AliasingError(std::string(stage) + ": field reaches the grid boundary (edge energy fraction " +
                        std::to_string(edge) + ")");
  }
}

ModeBasis Propagator::at(double z_detect_cm) const {
  constexpr double slack = 1e-9;
  const double lo = layout_.focal_plane_cm();
  const double hi = layout_.image_plane_cm();
  if (!(z_detect_cm >= lo - slack && z_detect_cm <= hi + slack)) {
    throw DomainError("detection plane " + std::to_string(z_detect_cm) + " cm outside [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "] cm");
  }
  ModeBasis out;
  out.grid = grid_;
  out.modes = after_lens_;
  out.weights = weights_;
  out.wavelength_um = wavelength_um_;
  out.plane = Plane::arbitrary_z;
  out.z_cm = z_detect_cm;

  Fft1D fft(grid_.points);
  free_space(fft, out.modes, (z_detect_cm - layout_.lens_position_cm) * 1e4, "lens to detector");
  return out;
}

ModeBasis propagate(const ModeBasis& basis, const OpticalLayout& layout, double z_detect_cm,
                    std::size_t points) {
  return Propagator(basis, layout, points).at(z_detect_cm);
}

}  // namespace schmidt
