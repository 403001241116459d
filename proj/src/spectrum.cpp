#include "schmidt/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "schmidt/errors.hpp"

namespace schmidt {

SchmidtSpectrum normalize(std::span<const double> raw_weights, double relative_cutoff,
                          std::string label) {
  if (raw_weights.empty()) throw InvalidSpectrum("empty weight list");
  double largest = 0.0;
  for (double w : raw_weights) {
    if (!std::isfinite(w)) throw InvalidSpectrum("non-finite weight");
    if (w < 0.0) throw InvalidSpectrum("negative weight " + std::to_string(w));
    largest = std::max(largest, w);
  }
  if (largest <= 0.0) throw InvalidSpectrum("all weights are zero");

  std::vector<double> kept;
  kept.reserve(raw_weights.size());
  const double floor = relative_cutoff * largest;
  for (double w : raw_weights) {
    if (w > 0.0 && w >= floor) kept.push_back(w / largest);
  }
  std::sort(kept.begin(), kept.end(), std::greater<>());

  // Ascending summation for accuracy.
  const double total = std::accumulate(kept.rbegin(), kept.rend(), 0.0);
  for (double& w : kept) w /= total;

  SchmidtSpectrum s;
  s.weights_ = std::move(kept);
  s.label_ = std::move(label);
  return s;
}

double log_sinh_squared(double x) {
  // sinh x = e^x (1 - e^{-2x}) / 2
  return 2.0 * (x + std::log(-std::expm1(-2.0 * x)) - std::log(2.0));
}

GainedState gain_transform(std::span<const double> weights, double gain) {
  if (!(gain > 0.0) || !std::isfinite(gain)) {
    throw InvalidGain("gain must be positive and finite, got " + std::to_string(gain));
  }
  GainedState out;
  out.gain = gain;
  out.weights.resize(weights.size());

  double log_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw InvalidSpectrum("negative weight");
    const double l = weights[i] > 0.0 ? log_sinh_squared(std::sqrt(weights[i]) * gain)
                                      : -std::numeric_limits<double>::infinity();
    out.weights[i] = l;
    log_max = std::max(log_max, l);
  }
  if (!std::isfinite(log_max)) throw InvalidSpectrum("all weights are zero");

  std::vector<double> ascending;
  ascending.reserve(weights.size());
  for (double& l : out.weights) {
    l = std::exp(l - log_max);
    ascending.push_back(l);
  }
  std::sort(ascending.begin(), ascending.end());
  const double scaled_sum = std::accumulate(ascending.begin(), ascending.end(), 0.0);
  for (double& w : out.weights) w /= scaled_sum;

  out.log_total_photons = log_max + std::log(scaled_sum);
  out.total_photons = std::exp(out.log_total_photons);
  return out;
}

GainedState gain_transform(const SchmidtSpectrum& spectrum, double gain) {
  return gain_transform(spectrum.weights(), gain);
}

double schmidt_number(std::span<const double> weights) {
  std::vector<double> sorted(weights.begin(), weights.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double w : sorted) {
    sum += w;
    sum_sq += w * w;
  }
  if (!(sum_sq > 0.0)) throw InvalidSpectrum("schmidt_number of an empty or zero spectrum");
  return sum * sum / sum_sq;
}

namespace {
// Rounding in K = 1/sum(w^2) can land a hair below one for a single mode.
constexpr double kUnitSlack = 1e-12;

void check_schmidt_number(double K) {
  if (!(K >= 1.0 - kUnitSlack) || std::isnan(K)) {
    throw DomainError("Schmidt number must be >= 1, got " + std::to_string(K));
  }
}
}  // namespace

double g2_auto(double K) {
  check_schmidt_number(K);
  return 1.0 + 1.0 / std::max(K, 1.0);
}

double g2_cross(double K, double photons_per_mode) {
  check_schmidt_number(K);
  if (!(photons_per_mode > 0.0)) {
    throw DomainError("photons per mode must be positive, got " +
                      std::to_string(photons_per_mode));
  }
  K = std::max(K, 1.0);
  return 1.0 + 1.0 / K + 1.0 / (photons_per_mode * K);
}

std::vector<IndexedWeight> tensor_indexed(std::span<const double> first,
                                          std::span<const double> second,
                                          double relative_cutoff) {
  std::vector<IndexedWeight> out;
  out.reserve(first.size() * second.size());
  double largest = 0.0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    for (std::size_t j = 0; j < second.size(); ++j) {
      const double w = first[i] * second[j];
      largest = std::max(largest, w);
      out.push_back({w, i, j});
    }
  }
  if (!(largest > 0.0)) throw InvalidSpectrum("tensor of zero spectra");
  const double floor = relative_cutoff * largest;
  std::erase_if(out, [floor](const IndexedWeight& e) { return !(e.weight > 0.0) || e.weight < floor; });
  std::sort(out.begin(), out.end(), [](const IndexedWeight& a, const IndexedWeight& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.first + a.second != b.first + b.second) return a.first + a.second < b.first + b.second;
    return a.first < b.first;
  });
  double total = 0.0;
  for (auto it = out.rbegin(); it != out.rend(); ++it) total += it->weight;
  for (auto& e : out) e.weight /= total;
  return out;
}

SchmidtSpectrum tensor_spectrum(const SchmidtSpectrum& first, const SchmidtSpectrum& second,
                                double relative_cutoff) {
  const auto joint = tensor_indexed(first.weights(), second.weights(), relative_cutoff);
  std::vector<double> w;
  w.reserve(joint.size());
  for (const auto& e : joint) w.push_back(e.weight);
  std::string label = first.label().empty() && second.label().empty() ? "" : "joint";
  return normalize(w, 0.0, std::move(label));
}

SchmidtSpectrum geometric_spectrum(double K, double relative_cutoff, std::string label) {
  if (!(K >= 1.0) || !std::isfinite(K)) {
    throw DomainError("geometric spectrum needs finite K >= 1, got " + std::to_string(K));
  }
  // K = (1 + t) / (1 - t)
  const double t = (K - 1.0) / (K + 1.0);
  std::vector<double> w{1.0};
  if (t > 0.0) {
    const double floor = std::max(relative_cutoff, std::numeric_limits<double>::min());
    for (double tn = t; tn >= floor; tn *= t) w.push_back(tn);
  }
  return normalize(w, relative_cutoff, std::move(label));
}

CorrelationPrediction predict(double K, double total_photons) {
  CorrelationPrediction p;
  p.schmidt_number = K;
  p.transmitted_photons = total_photons;
  p.photons_per_mode = total_photons / K;
  p.g2_auto = g2_auto(K);
  p.g2_cross = total_photons > 0.0 ? g2_cross(K, p.photons_per_mode)
                                   : std::numeric_limits<double>::infinity();
  return p;
}

}  // namespace schmidt
