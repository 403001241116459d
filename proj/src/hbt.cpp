#include "schmidt/hbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "schmidt/errors.hpp"
#include "schmidt/format.hpp"
#include "schmidt/parallel.hpp"
#include "schmidt/philox.hpp"

namespace schmidt {

void SamplerConfig::validate() const {
  if (pulses < 2) throw DomainError("need at least two pulses");
  for (const DetectorArm* arm : {&arm1, &arm2}) {
    if (!(arm->efficiency > 0.0 && arm->efficiency <= 1.0)) {
      throw DomainError("detector efficiency must be in (0, 1]");
    }
    if (!(arm->noise_rms >= 0.0)) throw DomainError("electronic noise rms must be >= 0");
  }
  if (!(splitting_ratio > 0.0 && splitting_ratio < 1.0)) {
    throw DomainError("splitting ratio must be in (0, 1)");
  }
  if (!(pump_jitter_rms >= 0.0)) throw DomainError("pump jitter rms must be >= 0");
}

namespace {

void check_weights(std::span<const double> weights, double total_photons) {
  if (weights.empty()) throw InvalidSpectrum("no modes to sample");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidSpectrum("invalid mode weight");
  }
  if (!(total_photons > 0.0) || !std::isfinite(total_photons)) {
    throw DomainError("total photon number must be positive and finite");
  }
}

}  // namespace

double detector_response(double ideal_signal, const DetectorArm& arm, double standard_normal_draw) {
  return std::max(0.0, arm.efficiency * ideal_signal + arm.noise_rms * standard_normal_draw);
}

PulseBatch sample_single_beam(std::span<const double> weights, double total_photons,
                              const SamplerConfig& config) {
  config.validate();
  check_weights(weights, total_photons);

  std::vector<double> means(weights.size());
  for (std::size_t n = 0; n < weights.size(); ++n) means[n] = weights[n] * total_photons;

  PulseBatch batch;
  batch.mode_count = weights.size();
  batch.s1.resize(config.pulses);
  batch.s2.resize(config.pulses);
  const PhiloxKey key = philox_key(config.seed);
  const double t = config.splitting_ratio;
  const bool noisy1 = config.arm1.noise_rms > 0.0;
  const bool noisy2 = config.arm2.noise_rms > 0.0;

  parallel_for(config.pulses, config.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      double intensity = 0.0;
      for (std::size_t n = 0; n < means.size(); n += 2) {
        const auto b = philox_block(key, p, kRoleIntensity, static_cast<std::uint32_t>(n / 2));
        intensity -= means[n] * std::log(to_open_unit(b.first));
        if (n + 1 < means.size()) intensity -= means[n + 1] * std::log(to_open_unit(b.second));
      }
      if (config.pump_jitter_rms > 0.0) {
        const double z = standard_normal(philox_block(key, p, kRoleJitter, 0));
        intensity *= std::max(0.0, 1.0 + config.pump_jitter_rms * z);
      }
      const double z1 = noisy1 ? standard_normal(philox_block(key, p, kRoleNoiseArm1, 0)) : 0.0;
      const double z2 = noisy2 ? standard_normal(philox_block(key, p, kRoleNoiseArm2, 0)) : 0.0;
      batch.s1[p] = detector_response(t * intensity, config.arm1, z1);
      batch.s2[p] = detector_response((1.0 - t) * intensity, config.arm2, z2);
    }
  });
  return batch;
}

namespace {

std::int64_t thin(std::int64_t n, double p, PhiloxKey key, std::uint64_t pulse, std::uint32_t role) {
  if (p >= 1.0 || n == 0) return n;
  PhiloxEngine engine(key, pulse, role);
  std::binomial_distribution<std::int64_t> dist(n, p);
  return dist(engine);
}

}  // namespace

TwinBatch sample_twin_beams(std::span<const double> weights, double total_photons,
                            const SamplerConfig& config) {
  config.validate();
  check_weights(weights, total_photons);

  // log(mu / (1 + mu)) per mode for inverse-CDF geometric draws.
  std::vector<double> log_ratio(weights.size());
  for (std::size_t n = 0; n < weights.size(); ++n) {
    const double mu = weights[n] * total_photons;
    if (mu > kMaxDiscreteModeMean) {
      throw OverflowGuard("mean photon number " + std::to_string(mu) +
                          " per mode exceeds 2^31; use the continuous sampler");
    }
    log_ratio[n] = mu > 0.0 ? -std::log1p(1.0 / mu) : -std::numeric_limits<double>::infinity();
  }

  TwinBatch out;
  for (PulseBatch* b : {&out.signal_arms, &out.cross}) {
    b->mode_count = weights.size();
    b->s1.resize(config.pulses);
    b->s2.resize(config.pulses);
  }
  const PhiloxKey key = philox_key(config.seed);

  auto geometric = [](std::uint64_t bits, double lr) -> std::int64_t {
    if (!std::isfinite(lr)) return 0;
    return static_cast<std::int64_t>(std::floor(std::log(to_open_unit(bits)) / lr));
  };

  parallel_for(config.pulses, config.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      std::int64_t photons = 0;
      for (std::size_t n = 0; n < log_ratio.size(); n += 2) {
        const auto b = philox_block(key, p, kRolePhotons, static_cast<std::uint32_t>(n / 2));
        photons += geometric(b.first, log_ratio[n]);
        if (n + 1 < log_ratio.size()) photons += geometric(b.second, log_ratio[n + 1]);
      }
      const std::int64_t signal = thin(photons, config.arm1.efficiency, key, p, kRoleThinSignal);
      const std::int64_t idler = thin(photons, config.arm2.efficiency, key, p, kRoleThinIdler);
      const std::int64_t first = thin(signal, config.splitting_ratio, key, p, kRoleSplit);
      out.cross.s1[p] = static_cast<double>(signal);
      out.cross.s2[p] = static_cast<double>(idler);
      out.signal_arms.s1[p] = static_cast<double>(first);
      out.signal_arms.s2[p] = static_cast<double>(signal - first);
    }
  });
  return out;
}

G2Estimate estimate_g2(const PulseBatch& batch, std::size_t blocks) {
  const std::size_t n = batch.size();
  if (batch.s2.size() != n) throw DegenerateBatch("arm lengths differ");
  if (n < 2) throw DegenerateBatch("need at least two pulses");
  blocks = std::clamp<std::size_t>(blocks, 2, n);

  // Contiguous blocks whose sizes differ by at most one.
  std::vector<double> sum1(blocks, 0.0), sum2(blocks, 0.0), sum12(blocks, 0.0);
  std::vector<std::size_t> count(blocks, 0);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t begin = b * n / blocks;
    const std::size_t end = (b + 1) * n / blocks;
    for (std::size_t i = begin; i < end; ++i) {
      sum1[b] += batch.s1[i];
      sum2[b] += batch.s2[i];
      sum12[b] += batch.s1[i] * batch.s2[i];
    }
    count[b] = end - begin;
  }
  double t1 = 0.0, t2 = 0.0, t12 = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    t1 += sum1[b];
    t2 += sum2[b];
    t12 += sum12[b];
  }
  if (!(t1 > 0.0) || !(t2 > 0.0)) throw DegenerateBatch("an arm has zero mean signal");

  auto ratio = [](double s1, double s2, double s12, double m) { return s12 * m / (s1 * s2); };

  G2Estimate est;
  est.pulses_used = n;
  est.value = ratio(t1, t2, t12, static_cast<double>(n));

  std::vector<double> replicas(blocks);
  bool complete = true;
  for (std::size_t b = 0; b < blocks; ++b) {
    const double r1 = t1 - sum1[b];
    const double r2 = t2 - sum2[b];
    if (!(r1 > 0.0) || !(r2 > 0.0)) {
      complete = false;
      break;
    }
    replicas[b] = ratio(r1, r2, t12 - sum12[b], static_cast<double>(n - count[b]));
  }
  if (!complete) {
    est.std_error = std::numeric_limits<double>::infinity();
    return est;
  }
  double mean = 0.0;
  for (double r : replicas) mean += r;
  mean /= static_cast<double>(blocks);
  double ss = 0.0;
  for (double r : replicas) ss += (r - mean) * (r - mean);
  est.std_error = std::sqrt(ss * static_cast<double>(blocks - 1) / static_cast<double>(blocks));
  return est;
}

void write_pulse_csv(const PulseBatch& batch, const std::string& path,
                     const std::string& metadata_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "# " << metadata_json << '\n' << "s1,s2\n";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out << format_double(batch.s1[i]) << ',' << format_double(batch.s2[i]) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace schmidt
