#include "schmidt/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "schmidt/errors.hpp"
#include "schmidt/format.hpp"

namespace schmidt {

using cd = std::complex<double>;

Eigen::VectorXd Grid1D::coordinates() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(points));
  for (std::size_t j = 0; j < points; ++j) out[static_cast<Eigen::Index>(j)] = x(j);
  return out;
}

std::string to_string(PhaseMatchingModel m) {
  return m == PhaseMatchingModel::gaussian_approx ? "gaussian_approx" : "sinc_exact";
}

PhaseMatchingModel phase_matching_model_from_string(const std::string& s) {
  if (s == "gaussian_approx") return PhaseMatchingModel::gaussian_approx;
  if (s == "sinc_exact") return PhaseMatchingModel::sinc_exact;
  throw DomainError("unknown phase-matching model '" + s + "'");
}

double KernelParams::phase_matching_width() const {
  if (phase_matching_width_um) return *phase_matching_width_um;
  const double k_pump = 2.0 * std::numbers::pi * pump_refractive_index / (pump_wavelength_nm * 1e-3);
  return std::sqrt(kSincGaussianAlpha * crystal_length_mm * 1e3 / k_pump);
}

void KernelParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError(std::string(name) + " must be positive, got " + std::to_string(v));
    }
  };
  positive(pump_waist_um, "pump_waist_um");
  positive(signal_wavelength_nm, "signal_wavelength_nm");
  positive(pump_wavelength_nm, "pump_wavelength_nm");
  positive(crystal_length_mm, "crystal_length_mm");
  positive(pump_refractive_index, "pump_refractive_index");
  positive(phase_matching_width(), "phase_matching_width_um");
}

double double_gaussian_schmidt_number(double width_ratio) {
  return 0.5 * (width_ratio + 1.0 / width_ratio);
}

std::vector<double> double_gaussian_weights(double width_ratio, std::size_t count) {
  const double t = std::pow((width_ratio - 1.0) / (width_ratio + 1.0), 2);
  std::vector<double> w(count);
  double tn = 1.0;
  for (auto& v : w) {
    v = (1.0 - t) * tn;
    tn *= t;
  }
  return w;
}

namespace {

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

void check_resolution(const Grid1D& g, double sigma_p, double sigma_c) {
  // 1/e half-width of exp(-u^2 / (4 sigma^2)) along one coordinate is 2 sigma.
  const double pump_ppw = 2.0 * sigma_p / g.spacing_um;
  const double pm_ppw = 2.0 * sigma_c / g.spacing_um;
  if (pump_ppw < kMinPointsPerWidth) {
    throw ResolutionError("pump envelope width", pump_ppw, kMinPointsPerWidth);
  }
  if (pm_ppw < kMinPointsPerWidth) {
    throw ResolutionError("phase-matching width", pm_ppw, kMinPointsPerWidth);
  }
  const double widest = std::max(sigma_p, sigma_c);
  if (0.5 * g.extent_um() < 3.0 * widest) {
    throw ResolutionError("grid extent (in units of the wider kernel width)",
                          0.5 * g.extent_um() / widest, 3.0);
  }
}

}  // namespace

BiphotonKernel build_kernel(const KernelParams& params, const GridSpec& grid_spec) {
  params.validate();
  const double sigma_p = params.pump_width_um();
  const double sigma_c = params.phase_matching_width();
  if (grid_spec.points < 2) throw DomainError("grid needs at least two points");
  const double extent = grid_spec.extent_um.value_or(8.0 * std::max(sigma_p, sigma_c));
  if (!(extent > 0.0)) throw DomainError("grid extent must be positive");

  BiphotonKernel k;
  k.params = params;
  k.grid = Grid1D{grid_spec.points, extent / static_cast<double>(grid_spec.points)};
  check_resolution(k.grid, sigma_p, sigma_c);

  const auto n = static_cast<Eigen::Index>(k.grid.points);
  const Eigen::VectorXd x = k.grid.coordinates();
  k.amplitude.resize(n, n);

  if (params.model == PhaseMatchingModel::gaussian_approx) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index s = 0; s < n; ++s) {
        const double sum = x[s] + x[i];
        const double diff = x[s] - x[i];
        k.amplitude(s, i) =
            std::exp(-sum * sum / (4.0 * sigma_p * sigma_p) - diff * diff / (4.0 * sigma_c * sigma_c));
      }
    }
    k.real_valued = true;
  } else {
    // Angular-spectrum form: pump envelope in q_s + q_i, sinc phase matching in
    // q_s - q_i, with b chosen so exp(-alpha b v^2) is the gaussian_approx kernel.
    const double b = sigma_c * sigma_c / (4.0 * kSincGaussianAlpha);
    const double dq = 2.0 * std::numbers::pi / k.grid.extent_um();
    Eigen::VectorXd q(n);
    for (Eigen::Index m = 0; m < n; ++m) q[m] = (static_cast<double>(m) - static_cast<double>(n / 2)) * dq;
    Eigen::MatrixXd spectral(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index s = 0; s < n; ++s) {
        const double u = q[s] + q[i];
        const double v = q[s] - q[i];
        spectral(s, i) = std::exp(-u * u * sigma_p * sigma_p / 4.0) * sinc(b * v * v);
      }
    }
    Eigen::MatrixXcd fourier(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index m = 0; m < n; ++m) fourier(j, m) = std::polar(dq, q[m] * x[j]);
    }
    k.amplitude = fourier * spectral.cast<cd>() * fourier.transpose();
    const double imag = k.amplitude.imag().cwiseAbs().maxCoeff();
    const double real = k.amplitude.real().cwiseAbs().maxCoeff();
    k.real_valued = imag <= 1e-14 * real;
    if (k.real_valued) k.amplitude = k.amplitude.real().cast<cd>();
  }

  const double norm = k.amplitude.norm() * k.grid.spacing_um;
  if (!(norm > 0.0) || !std::isfinite(norm)) throw ComputationError("kernel has zero or non-finite norm");
  k.amplitude /= norm;
  return k;
}

Eigen::MatrixXcd gram_matrix(const ModeBasis& basis) {
  return basis.grid.spacing_um * (basis.modes.adjoint() * basis.modes);
}

namespace {

// Rotate the mode so its first largest-magnitude sample is real positive.
cd canonical_phase(const Eigen::Ref<const Eigen::VectorXcd>& mode) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index j = 0; j < mode.size(); ++j) {
    const double a = std::abs(mode[j]);
    if (a > best_abs * (1.0 + 1e-9)) {
      best_abs = a;
      best = j;
    }
  }
  return best_abs > 0.0 ? std::conj(mode[best]) / best_abs : cd{1.0, 0.0};
}

struct SvdParts {
  Eigen::VectorXd singular;
  Eigen::MatrixXcd u;
  Eigen::MatrixXcd v;
};

SvdParts run_svd(const BiphotonKernel& kernel, bool vectors) {
  const double dx = kernel.grid.spacing_um;
  const unsigned opts = vectors ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0u;
  SvdParts out;
  if (kernel.real_valued) {
    const Eigen::MatrixXd m = kernel.amplitude.real() * dx;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, opts);
    if (svd.info() != Eigen::Success) throw ComputationError("SVD of the kernel did not converge");
    out.singular = svd.singularValues();
    if (vectors) {
      out.u = svd.matrixU().cast<cd>();
      out.v = svd.matrixV().cast<cd>();
    }
  } else {
    const Eigen::MatrixXcd m = kernel.amplitude * dx;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, opts);
    if (svd.info() != Eigen::Success) throw ComputationError("SVD of the kernel did not converge");
    out.singular = svd.singularValues();
    if (vectors) {
      out.u = svd.matrixU();
      out.v = svd.matrixV();
    }
  }
  return out;
}

}  // namespace

std::vector<double> schmidt_weights(const BiphotonKernel& kernel) {
  const auto parts = run_svd(kernel, false);
  const double total = parts.singular.squaredNorm();
  std::vector<double> w(static_cast<std::size_t>(parts.singular.size()));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double s = parts.singular[static_cast<Eigen::Index>(i)];
    w[i] = s * s / total;
  }
  return w;
}

Decomposition decompose(const BiphotonKernel& kernel, std::size_t max_modes,
                        double relative_cutoff) {
  if (max_modes == 0) throw DomainError("max_modes must be at least 1");
  const auto parts = run_svd(kernel, true);
  const double total = parts.singular.squaredNorm();
  const double largest = parts.singular[0] * parts.singular[0];

  std::size_t keep = 0;
  double kept_sq = 0.0;
  std::vector<double> raw;
  for (Eigen::Index n = 0; n < parts.singular.size() && keep < max_modes; ++n) {
    const double w = parts.singular[n] * parts.singular[n];
    if (!(w > 0.0) || w < relative_cutoff * largest) break;
    raw.push_back(w / total);
    kept_sq += w;
    ++keep;
  }

  Decomposition d;
  d.spectrum = normalize(raw, 0.0, "spatial");
  d.reconstruction_error = std::sqrt(std::max(0.0, total - kept_sq) / total);

  const double inv_sqrt_dx = 1.0 / std::sqrt(kernel.grid.spacing_um);
  const double wavelength_um = kernel.params.signal_wavelength_nm * 1e-3;
  for (ModeBasis* b : {&d.signal, &d.idler}) {
    b->grid = kernel.grid;
    b->weights.assign(d.spectrum.weights().begin(), d.spectrum.weights().end());
    b->wavelength_um = wavelength_um;
    b->plane = Plane::crystal_output;
    b->z_cm = 0.0;
    b->modes.resize(kernel.amplitude.rows(), static_cast<Eigen::Index>(keep));
  }
  // A = U S V^H, so A(x_s, x_i) = sum s_n psi_n(x_s) phi_n(x_i) with phi_n = conj(v_n).
  for (std::size_t n = 0; n < keep; ++n) {
    const auto col = static_cast<Eigen::Index>(n);
    const cd phase = canonical_phase(parts.u.col(col));
    d.signal.modes.col(col) = parts.u.col(col) * phase * inv_sqrt_dx;
    d.idler.modes.col(col) = parts.v.col(col).conjugate() * std::conj(phase) * inv_sqrt_dx;
  }
  return d;
}

void write_modes_csv(const ModeBasis& basis, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "x_um";
  for (std::size_t n = 0; n < basis.size(); ++n) out << ",re_" << n << ",im_" << n;
  out << '\n';
  for (std::size_t j = 0; j < basis.grid.points; ++j) {
    out << format_double(basis.grid.x(j));
    for (std::size_t n = 0; n < basis.size(); ++n) {
      const cd v = basis.modes(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(n));
      out << ',' << format_double(v.real()) << ',' << format_double(v.imag());
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace schmidt
