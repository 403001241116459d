#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every draw is
// a pure function of (key, counter), so samples can be generated in any order
// and on any number of threads with identical results.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace schmidt {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  constexpr std::uint32_t m0 = 0xD2511F53u;
  constexpr std::uint32_t m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u;
  constexpr std::uint32_t w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += w0;
      key[1] += w1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Independent seed for a numbered sub-stream (e.g. one scan point).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

constexpr PhiloxKey philox_key(std::uint64_t seed) noexcept {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Uniform on the open interval (0, 1) from 52 random bits.
constexpr double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Two 64-bit words from one Philox block.
struct PhiloxBlock {
  std::uint64_t first;
  std::uint64_t second;
};

constexpr PhiloxBlock philox_block(PhiloxKey key, std::uint64_t index, std::uint32_t role,
                                   std::uint32_t slot) noexcept {
  const auto out = philox4x32_10(
      {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), role, slot}, key);
  return {(static_cast<std::uint64_t>(out[1]) << 32) | out[0],
          (static_cast<std::uint64_t>(out[3]) << 32) | out[2]};
}

/// Box-Muller standard normal from one block.
inline double standard_normal(PhiloxBlock b) noexcept {
  const double u1 = to_open_unit(b.first);
  const double u2 = to_open_unit(b.second);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// UniformRandomBitGenerator over the counter sequence (index, role, 0..).
/// Lets standard distributions draw from a keyed stream.
class PhiloxEngine {
 public:
  using result_type = std::uint64_t;

  PhiloxEngine(PhiloxKey key, std::uint64_t index, std::uint32_t role) noexcept
      : key_(key), index_(index), role_(role) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (!have_spare_) {
      const auto b = philox_block(key_, index_, role_, slot_++);
      spare_ = b.second;
      have_spare_ = true;
      return b.first;
    }
    have_spare_ = false;
    return spare_;
  }

 private:
  PhiloxKey key_;
  std::uint64_t index_;
  std::uint32_t role_;
  std::uint32_t slot_ = 0;
  std::uint64_t spare_ = 0;
  bool have_spare_ = false;
};

}  // namespace schmidt
