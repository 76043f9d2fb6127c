#include "morphcf/descriptors.hpp"

#include "morphcf/signal_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace morphcf {

std::string_view descriptor_name(std::size_t j) {
  static constexpr std::array<std::string_view, PropertyProfile::kSize> names{
      "amplitude", "dominant_frequency", "plateau", "trend", "max_gradient"};
  if (j >= names.size()) {
    throw std::out_of_range("descriptor index out of range");
  }
  return names[j];
}

namespace {

std::vector<double> sorted_copy(std::span<const double> x) {
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  return v;
}

double amplitude_sorted(std::span<const double> sorted) {
  return percentile_sorted(sorted, 95.0) - percentile_sorted(sorted, 5.0);
}

double plateau_sorted(std::span<const double> x, std::span<const double> sorted) {
  const double theta = percentile_sorted(sorted, 60.0);
  const auto n = std::count_if(x.begin(), x.end(), [theta](double v) { return v >= theta; });
  return static_cast<double>(n) / static_cast<double>(x.size());
}

} // namespace

double amplitude(const TimeSeries& x) { return amplitude_sorted(sorted_copy(x.values())); }

double dominant_frequency(const TimeSeries& x) {
  const std::size_t T = x.size();
  if (T < 4) {
    throw std::invalid_argument("dominant_frequency: need at least 4 samples");
  }
  const auto mags = dft_magnitudes(x.values(), /*mean_center=*/true);
  // argmax over 0 <= k < floor(T/2). Magnitudes within FFT round-off of the
  // current best count as ties, which keep the lower bin.
  const std::size_t kmax = std::max<std::size_t>(1, T / 2);
  std::size_t best = 0;
  for (std::size_t k = 1; k < kmax; ++k) {
    if (mags[k] > mags[best] * (1.0 + 1e-12)) {
      best = k;
    }
  }
  // A (numerically) constant series leaves only FFT round-off; report DC.
  double scale = 0.0;
  for (double v : x.values()) scale += std::abs(v);
  if (mags[best] <= 1e-12 * scale) {
    return 0.0;
  }
  return static_cast<double>(best) * x.sample_rate_hz() / static_cast<double>(T);
}

double plateau_fraction(const TimeSeries& x) {
  return plateau_sorted(x.values(), sorted_copy(x.values()));
}

double trend_slope(const TimeSeries& x) {
  const auto v = x.values();
  const double n = static_cast<double>(v.size());
  const double tbar = (n - 1.0) / 2.0;
  double xbar = 0.0;
  for (double s : v) xbar += s;
  xbar /= n;
  double cov = 0.0;
  double var = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    const double dt = static_cast<double>(t) - tbar;
    cov += dt * (v[t] - xbar);
    var += dt * dt;
  }
  return cov / var;
}

double gradient_q95(std::span<const double> x, double sample_rate_hz, bool per_second) {
  if (x.size() < 2) {
    throw std::invalid_argument("gradient_q95: need at least 2 samples");
  }
  std::vector<double> d(x.size() - 1);
  for (std::size_t t = 1; t < x.size(); ++t) {
    d[t - 1] = std::abs(x[t] - x[t - 1]);
  }
  std::sort(d.begin(), d.end());
  const double q = percentile_sorted(d, 95.0);
  return per_second ? q * sample_rate_hz : q;
}

double max_gradient(const TimeSeries& x) {
  return gradient_q95(x.values(), x.sample_rate_hz(), /*per_second=*/true);
}

PropertyProfile profile(const TimeSeries& x) {
  const auto sorted = sorted_copy(x.values());
  PropertyProfile p;
  p.amplitude = amplitude_sorted(sorted);
  p.dominant_freq_hz = dominant_frequency(x);
  p.plateau_frac = plateau_sorted(x.values(), sorted);
  p.trend_slope = trend_slope(x);
  p.max_gradient = max_gradient(x);
  return p;
}

} // namespace morphcf
