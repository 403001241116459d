#pragma once

// Schmidt spectra, the high-gain transformation of their weights, and the
// closed-form correlation functions that follow from them.

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace schmidt {

inline constexpr double kDefaultTailCutoff = 1e-12;

/// Ordered low-gain Schmidt weights. Sorted non-increasing, non-negative,
/// summing to one. Only constructible through normalize().
class SchmidtSpectrum {
 public:
  SchmidtSpectrum() = default;

  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::string& label() const noexcept { return label_; }

  friend SchmidtSpectrum normalize(std::span<const double>, double, std::string);

 private:
  std::vector<double> weights_;
  std::string label_;
};

/// Sorts, normalizes to unit sum and trims weights below
/// `relative_cutoff * max`. Throws InvalidSpectrum on negative, non-finite or
/// all-zero input.
SchmidtSpectrum normalize(std::span<const double> raw_weights,
                          double relative_cutoff = kDefaultTailCutoff,
                          std::string label = "");

inline SchmidtSpectrum normalize(std::initializer_list<double> raw,
                                 double relative_cutoff = kDefaultTailCutoff,
                                 std::string label = "") {
  return normalize(std::span<const double>(raw.begin(), raw.size()), relative_cutoff,
                   std::move(label));
}

/// Spectrum after parametric amplification with gain G.
struct GainedState {
  double gain = 0.0;
  std::vector<double> weights;  // lambda_n, same order as the source spectrum
  double total_photons = 0.0;   // N = sum sinh^2(sqrt(w_n) G); may be +inf past ~1e308
  double log_total_photons = 0.0;
};

/// lambda_n = sinh^2(sqrt(w_n) G) / N. Evaluated in log space so that large
/// gains never overflow the normalized weights.
GainedState gain_transform(const SchmidtSpectrum& spectrum, double gain);

/// Same transformation on raw non-negative weights (need not be sorted);
/// output order matches input order.
GainedState gain_transform(std::span<const double> weights, double gain);

/// log(sinh^2(x)) for x > 0, accurate for both small and large x.
double log_sinh_squared(double x);

/// K = (sum w)^2 / sum w^2. Summation runs over the weights in ascending
/// order, so the result is bitwise invariant under permutation.
double schmidt_number(std::span<const double> weights);

inline double schmidt_number(const SchmidtSpectrum& s) { return schmidt_number(s.weights()); }

/// 1 + 1/K. Throws DomainError for K < 1.
double g2_auto(double schmidt_number);

/// 1 + 1/K + 1/(N_mode K). Throws DomainError for K < 1 or N_mode <= 0.
double g2_cross(double schmidt_number, double photons_per_mode);

/// All pairwise products, renormalized and sorted.
SchmidtSpectrum tensor_spectrum(const SchmidtSpectrum& first, const SchmidtSpectrum& second,
                                double relative_cutoff = kDefaultTailCutoff);

/// Pairwise products together with their (first, second) source indices,
/// sorted by weight (ties broken by index sum, then first index). Products
/// below the relative cutoff are dropped; weights are normalized.
struct IndexedWeight {
  double weight;
  std::size_t first;
  std::size_t second;
};
std::vector<IndexedWeight> tensor_indexed(std::span<const double> first,
                                          std::span<const double> second,
                                          double relative_cutoff = kDefaultTailCutoff);

/// Geometric spectrum (1-t) t^n with t chosen so that K equals `K`, trimmed at
/// the relative cutoff. K = 1 gives the single-mode spectrum.
SchmidtSpectrum geometric_spectrum(double K, double relative_cutoff = kDefaultTailCutoff,
                                   std::string label = "");

struct CorrelationPrediction {
  double schmidt_number = 1.0;
  double g2_auto = 2.0;
  double g2_cross = 3.0;
  double photons_per_mode = 0.0;
  double transmitted_photons = 0.0;
  bool low_signal = false;
};

/// Bundles K, N/K and both correlation functions.
CorrelationPrediction predict(double schmidt_number, double total_photons);

}  // namespace schmidt
