#pragma once

#include "morphcf/time_series.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

namespace morphcf {

/// The five global morphology descriptors of a waveform.
struct PropertyProfile {
  double amplitude = 0.0;        ///< Q95 - Q5, signal units
  double dominant_freq_hz = 0.0; ///< peak of the demeaned one-sided spectrum
  double plateau_frac = 0.0;     ///< fraction of samples at or above Q60
  double trend_slope = 0.0;      ///< OLS slope, signal units per sample
  double max_gradient = 0.0;     ///< Q95 of |first difference| / dt

  static constexpr std::size_t kSize = 5;

  std::array<double, kSize> as_array() const {
    return {amplitude, dominant_freq_hz, plateau_frac, trend_slope, max_gradient};
  }
  double operator[](std::size_t j) const { return as_array()[j]; }

  friend bool operator==(const PropertyProfile&, const PropertyProfile&) = default;
};

/// Descriptor order used by MorphSpec, feature vectors and output columns.
enum class Descriptor : std::size_t { Amplitude = 0, DominantFrequency, Plateau, Trend, MaxGradient };

std::string_view descriptor_name(std::size_t j);

double amplitude(const TimeSeries& x);
double dominant_frequency(const TimeSeries& x);
double plateau_fraction(const TimeSeries& x);
double trend_slope(const TimeSeries& x);

/// Q95 of |x_t - x_{t-1}|, divided by dt when `per_second` is set (the descriptor)
/// and left in signal units per sample otherwise (the optimizer's smoothness objective).
double gradient_q95(std::span<const double> x, double sample_rate_hz, bool per_second);

double max_gradient(const TimeSeries& x);

PropertyProfile profile(const TimeSeries& x);

} // namespace morphcf
