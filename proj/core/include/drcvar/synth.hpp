#pragma once

#include "drcvar/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace drcvar {

struct SpikyConfig {
  std::size_t days = 120;
  /// Probability that a day carries a price spike.
  double spike_prob = 0.15;
  /// Base spike height in $/MWh; heights are Pareto distributed above it.
  double spike_scale = 40.0;
  /// Half-width of the uniform price noise in $/MWh.
  double noise = 2.0;
  Date start{2013, 5, 1};
  /// From this day index on, spike heights are escalation_factor times the
  /// larger of their own draw and the largest earlier spike, so with a factor
  /// above 1 every late (test) spike exceeds every early (training) one.
  std::size_t escalation_day = 90;
  double escalation_factor = 2.5;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

struct SynthResult {
  Dataset data;
  std::vector<bool> spike_day;
};

/// Deterministic synthetic market: smooth daily load profile plus noise,
/// prices affine in load plus bounded noise plus heavy-tailed spikes.
SynthResult synth_spiky_labeled(const SpikyConfig& config, std::uint64_t seed);
Dataset synth_spiky(const SpikyConfig& config, std::uint64_t seed);

/// Intercept and slope of the noise-free price-load relation.
inline constexpr double kSynthPriceIntercept = 12.0;
inline constexpr double kSynthPriceSlope = 0.035;

}  // namespace drcvar
