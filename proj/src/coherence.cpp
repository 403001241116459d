#include "schmidt/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "schmidt/errors.hpp"

namespace schmidt {

using cd = std::complex<double>;

std::string to_string(ApertureShape s) { return s == ApertureShape::circular ? "circular" : "square"; }

ApertureShape aperture_shape_from_string(const std::string& s) {
  if (s == "circular") return ApertureShape::circular;
  if (s == "square") return ApertureShape::square;
  throw DomainError("unknown aperture shape '" + s + "'");
}

void ApertureSpec::validate() const {
  if (!(diameter_mm > 0.0) || !std::isfinite(diameter_mm)) {
    throw DomainError("aperture diameter must be positive, got " + std::to_string(diameter_mm));
  }
}

TransverseBasis make_transverse(const ModeBasis& axis, std::size_t modes_per_axis,
                                double relative_cutoff) {
  if (modes_per_axis == 0) throw DomainError("modes_per_axis must be at least 1");
  const std::size_t m = std::min(modes_per_axis, axis.size());
  TransverseBasis out;
  out.axis = axis;
  out.axis.modes = axis.modes.leftCols(static_cast<Eigen::Index>(m));
  const auto axis_weights = normalize(std::span(axis.weights).first(m), 0.0);
  out.axis.weights.assign(axis_weights.weights().begin(), axis_weights.weights().end());

  for (const auto& e : tensor_indexed(out.axis.weights, out.axis.weights, relative_cutoff)) {
    out.pairs.emplace_back(e.first, e.second);
    out.weights.push_back(e.weight);
  }
  return out;
}

TransverseBasis with_axis(const TransverseBasis& basis, ModeBasis axis) {
  if (axis.size() != basis.axis.size()) throw DomainError("axis basis size mismatch");
  TransverseBasis out = basis;
  out.axis = std::move(axis);
  return out;
}

namespace {

double circle_primitive(double r, double x) {
  x = std::clamp(x, -r, r);
  return 0.5 * (x * std::sqrt(std::max(0.0, r * r - x * x)) + r * r * std::asin(x / r));
}

double interval_overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

double disc_rectangle_overlap(double r, double x0, double x1, double y0, double y1) {
  if (!(r > 0.0) || x1 <= x0 || y1 <= y0) return 0.0;
  std::vector<double> breaks{x0, x1, -r, r};
  for (double y : {y0, y1}) {
    if (std::abs(y) < r) {
      const double xb = std::sqrt(r * r - y * y);
      breaks.push_back(xb);
      breaks.push_back(-xb);
    }
  }
  std::sort(breaks.begin(), breaks.end());

  double area = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = std::max(breaks[i], x0);
    const double b = std::min(breaks[i + 1], x1);
    if (b <= a) continue;
    const double mid = 0.5 * (a + b);
    if (std::abs(mid) >= r) continue;
    const double s = std::sqrt(r * r - mid * mid);
    const bool upper_is_circle = s < y1;
    const bool lower_is_circle = -s > y0;
    const double upper_mid = upper_is_circle ? s : y1;
    const double lower_mid = lower_is_circle ? -s : y0;
    if (upper_mid <= lower_mid) continue;
    const double arc = circle_primitive(r, b) - circle_primitive(r, a);
    const double upper = upper_is_circle ? arc : y1 * (b - a);
    const double lower = lower_is_circle ? -arc : y0 * (b - a);
    area += upper - lower;
  }
  return area;
}

ApertureMask aperture_mask(const Grid1D& grid, const ApertureSpec& aperture) {
  aperture.validate();
  const double half = 0.5 * aperture.diameter_mm * 1e3;
  const double dx = grid.spacing_um;
  const double origin = grid.x(0);

  auto index_range = [&](double centre) {
    const double lo = (centre - half - origin) / dx - 1.0;
    const double hi = (centre + half - origin) / dx + 1.0;
    const auto n = static_cast<double>(grid.points);
    const auto begin = static_cast<std::size_t>(std::clamp(std::floor(lo), 0.0, n));
    const auto end = static_cast<std::size_t>(std::clamp(std::ceil(hi) + 1.0, 0.0, n));
    return std::pair{begin, std::max(begin, end)};
  };
  const auto [xb, xe] = index_range(aperture.center_x_um);
  const auto [yb, ye] = index_range(aperture.center_y_um);

  ApertureMask mask;
  mask.x_begin = xb;
  mask.y_begin = yb;
  mask.coverage = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xe - xb), static_cast<Eigen::Index>(ye - yb));
  const double cell = dx * dx;
  for (std::size_t i = xb; i < xe; ++i) {
    const double x0 = grid.x(i) - 0.5 * dx - aperture.center_x_um;
    for (std::size_t j = yb; j < ye; ++j) {
      const double y0 = grid.x(j) - 0.5 * dx - aperture.center_y_um;
      double covered = 0.0;
      if (aperture.shape == ApertureShape::circular) {
        covered = disc_rectangle_overlap(half, x0, x0 + dx, y0, y0 + dx) / cell;
      } else {
        covered = interval_overlap(x0, x0 + dx, -half, half) * interval_overlap(y0, y0 + dx, -half, half) / cell;
      }
      mask.coverage(static_cast<Eigen::Index>(i - xb), static_cast<Eigen::Index>(j - yb)) = std::min(covered, 1.0);
    }
  }
  return mask;
}

namespace {

// Columns a * M + c hold conj(psi_a) psi_c over the given rows.
Eigen::MatrixXcd pair_products(const Eigen::MatrixXcd& psi, Eigen::Index row0, Eigen::Index rows) {
  const Eigen::Index m = psi.cols();
  Eigen::MatrixXcd out(rows, m * m);
  const auto block = psi.middleRows(row0, rows);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index c = 0; c < m; ++c) {
      out.col(a * m + c) = block.col(a).conjugate().cwiseProduct(block.col(c));
    }
  }
  return out;
}

}  // namespace

CoherenceMatrix coherence_matrix(const TransverseBasis& basis, const GainedState& gained,
                                 const std::optional<ApertureSpec>& aperture) {
  const std::size_t n = basis.size();
  if (gained.weights.size() != n) {
    throw DomainError("gained weights (" + std::to_string(gained.weights.size()) +
                      ") not aligned with the transverse basis (" + std::to_string(n) + ")");
  }
  const Eigen::MatrixXcd& psi = basis.axis.modes;
  const Eigen::Index m = psi.cols();
  const double dx = basis.axis.grid.spacing_um;

  Eigen::MatrixXcd overlap(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (!aperture) {
    const Eigen::MatrixXcd g = gram_matrix(basis.axis);
    for (std::size_t p = 0; p < n; ++p) {
      const auto [ap, bp] = basis.pairs[p];
      for (std::size_t q = 0; q < n; ++q) {
        const auto [aq, bq] = basis.pairs[q];
        overlap(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) =
            g(static_cast<Eigen::Index>(ap), static_cast<Eigen::Index>(aq)) *
            g(static_cast<Eigen::Index>(bp), static_cast<Eigen::Index>(bq));
      }
    }
  } else {
    const ApertureMask mask = aperture_mask(basis.axis.grid, *aperture);
    const Eigen::Index nx = mask.coverage.rows();
    const Eigen::Index ny = mask.coverage.cols();
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(m * m, m * m);
    if (nx > 0 && ny > 0) {
      const Eigen::MatrixXcd px = pair_products(psi, static_cast<Eigen::Index>(mask.x_begin), nx);
      const Eigen::MatrixXcd py = pair_products(psi, static_cast<Eigen::Index>(mask.y_begin), ny);
      Eigen::MatrixXcd masked(nx, m * m);
      masked.real() = mask.coverage * py.real();
      masked.imag() = mask.coverage * py.imag();
      full = (px.transpose() * masked) * (dx * dx);
    }
    for (std::size_t p = 0; p < n; ++p) {
      const auto [ap, bp] = basis.pairs[p];
      for (std::size_t q = 0; q < n; ++q) {
        const auto [aq, bq] = basis.pairs[q];
        overlap(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) =
            full(static_cast<Eigen::Index>(ap) * m + static_cast<Eigen::Index>(aq),
                 static_cast<Eigen::Index>(bp) * m + static_cast<Eigen::Index>(bq));
      }
    }
  }

  Eigen::VectorXd root(static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < n; ++p) root[static_cast<Eigen::Index>(p)] = std::sqrt(gained.weights[p]);

  CoherenceMatrix c;
  c.total_photons = gained.total_photons;
  c.normalized = root.asDiagonal() * overlap * root.asDiagonal();
  c.normalized = 0.5 * (c.normalized + c.normalized.adjoint()).eval();
  return c;
}

FilteredPrediction filter_modes(const TransverseBasis& basis, const GainedState& gained,
                                const std::optional<ApertureSpec>& aperture, double temporal_K) {
  if (!(temporal_K >= 1.0)) throw DomainError("temporal Schmidt number must be >= 1");
  const CoherenceMatrix c = coherence_matrix(basis, gained, aperture);

  FilteredPrediction out;
  const double trace = c.transmitted_fraction();
  out.transmitted_fraction = trace;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(c.normalized, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw ComputationError("coherence matrix eigensolver failed");
  const Eigen::VectorXd& values = eig.eigenvalues();

  if (trace > 0.0) {
    out.spatial_schmidt_number = std::max(1.0, trace * trace / c.normalized.squaredNorm());
    for (Eigen::Index i = values.size() - 1; i >= 0; --i) {
      const double v = std::max(0.0, values[i]);
      if (v > 0.0) out.spatial_weights.push_back(v);
    }
    const double sum = [&] {
      double s = 0.0;
      for (auto it = out.spatial_weights.rbegin(); it != out.spatial_weights.rend(); ++it) s += *it;
      return s;
    }();
    for (double& w : out.spatial_weights) w /= sum;
  } else {
    out.spatial_schmidt_number = 1.0;
    out.spatial_weights = {1.0};
  }

  out.prediction = predict(out.spatial_schmidt_number * temporal_K, gained.total_photons * std::max(trace, 0.0));
  out.prediction.low_signal = !(trace >= kLowSignalFraction);
  return out;
}

}  // namespace schmidt
