#include "drcvar/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace drcvar {

namespace {

double load_shape(std::size_t h) {
  const double x = static_cast<double>(h);
  return 0.78 + 0.28 * std::exp(-(x - 17.0) * (x - 17.0) / 18.0) + 0.10 * std::exp(-(x - 8.0) * (x - 8.0) / 8.0);
}

}  // namespace

void SpikyConfig::validate() const {
  if (days == 0) throw std::invalid_argument("days must be positive");
  if (!(spike_prob >= 0.0 && spike_prob <= 1.0)) throw std::invalid_argument("spike_prob must lie in [0, 1]");
  if (!(spike_scale >= 0.0) || !std::isfinite(spike_scale)) throw std::invalid_argument("spike_scale must be >= 0");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw std::invalid_argument("noise must be >= 0");
  if (!(escalation_factor > 0.0) || !std::isfinite(escalation_factor)) {
    throw std::invalid_argument("escalation_factor must be > 0");
  }
}

SynthResult synth_spiky_labeled(const SpikyConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SynthResult out;
  out.data.records.reserve(config.days);
  out.spike_day.reserve(config.days);
  double early_peak = 0.0;
  for (std::size_t d = 0; d < config.days; ++d) {
    DayRecord rec;
    rec.date = config.start.plus_days(static_cast<int>(d));
    const double season = 1000.0 + 120.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(d) / 45.0);
    const double level = season + 50.0 * gauss(rng);
    double mean_load = 0.0;
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      rec.load[h] = level * load_shape(h) + 15.0 * (2.0 * unit(rng) - 1.0);
      mean_load += rec.load[h] / static_cast<double>(kHoursPerDay);
    }
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      rec.price[h] = kSynthPriceIntercept + kSynthPriceSlope * rec.load[h] + config.noise * (2.0 * unit(rng) - 1.0);
    }

    // Spike draws are consumed every day so the base series does not depend
    // on spike_prob.
    const bool spike = unit(rng) < config.spike_prob;
    double height = config.spike_scale * std::pow(1.0 - unit(rng), -1.0 / 3.0);
    const double center = 14.0 + std::floor(5.0 * unit(rng));
    if (d < config.escalation_day) {
      if (spike) early_peak = std::max(early_peak, height);
    } else {
      height = config.escalation_factor * std::max(height, early_peak);
    }
    if (spike) {
      for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        const double x = static_cast<double>(h) - center;
        rec.price[h] += height * std::exp(-x * x / 12.5) * rec.load[h] / mean_load;
      }
    }
    out.data.records.push_back(rec);
    out.spike_day.push_back(spike);
  }
  return out;
}

Dataset synth_spiky(const SpikyConfig& config, std::uint64_t seed) {
  return synth_spiky_labeled(config, seed).data;
}

}  // namespace drcvar
