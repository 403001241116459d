#pragma once

// Virtual Hanbury Brown-Twiss experiment: per-pulse multimode photon
// statistics, detector readout, and the g2 estimator with jackknife errors.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace schmidt {

struct DetectorArm {
  double efficiency = 1.0;
  double noise_rms = 0.0;  // photon-equivalent units
};

struct SamplerConfig {
  std::size_t pulses = 30000;
  std::uint64_t seed = 0x5eed;
  DetectorArm arm1;
  DetectorArm arm2;
  double splitting_ratio = 0.5;  // fraction sent to arm 1
  /// Relative rms of a multiplicative per-pulse intensity fluctuation; 0 disables it.
  double pump_jitter_rms = 0.0;
  std::size_t workers = 1;

  void validate() const;
};

struct PulseBatch {
  std::vector<double> s1;
  std::vector<double> s2;
  std::size_t mode_count = 0;

  std::size_t size() const { return s1.size(); }
};

/// Continuous model: each mode's intensity is exponential with mean
/// lambda_n N; the beam is split at the beamsplitter and read out by the two
/// detectors.
PulseBatch sample_single_beam(std::span<const double> weights, double total_photons,
                              const SamplerConfig& config);

struct TwinBatch {
  PulseBatch signal_arms;  // signal beam split onto two detectors
  PulseBatch cross;        // (detected signal, detected idler)
};

/// Largest mean photon number per mode accepted by the discrete sampler.
inline constexpr double kMaxDiscreteModeMean = 2147483648.0;  // 2^31

/// Discrete model: Bose-Einstein photon numbers per mode, copied exactly
/// into signal and idler, then binomial detection thinning per arm.
TwinBatch sample_twin_beams(std::span<const double> weights, double total_photons,
                            const SamplerConfig& config);

/// Efficiency-scaled signal plus Gaussian noise, clamped at zero.
/// `standard_normal_draw` is the noise deviate in units of noise_rms.
double detector_response(double ideal_signal, const DetectorArm& arm, double standard_normal_draw);

struct G2Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t pulses_used = 0;
};

inline constexpr std::size_t kDefaultJackknifeBlocks = 100;

/// mean(s1 s2) / (mean(s1) mean(s2)) with a delete-one-block jackknife error.
/// Replicates with a zero arm mean make the error infinite.
G2Estimate estimate_g2(const PulseBatch& batch, std::size_t blocks = kDefaultJackknifeBlocks);

/// Two-column CSV (s1, s2), preceded by one '#' line carrying `metadata_json`.
void write_pulse_csv(const PulseBatch& batch, const std::string& path,
                     const std::string& metadata_json);

/// Draw roles used in the counter layout (index = pulse, role, slot).
enum DrawRole : std::uint32_t {
  kRoleIntensity = 1,
  kRoleNoiseArm1 = 2,
  kRoleNoiseArm2 = 3,
  kRoleJitter = 4,
  kRolePhotons = 5,
  kRoleThinSignal = 6,
  kRoleThinIdler = 7,
  kRoleSplit = 8,
};

}  // namespace schmidt
