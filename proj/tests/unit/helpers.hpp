#pragma once
#include "morphcf/regressor.hpp"
#include "morphcf/time_series.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

namespace testutil {

inline std::vector<double> sine_at_bin(std::size_t T, double bin, double amp = 1.0, double phase = 0.0) {
  std::vector<double> v(T);
  for (std::size_t t = 0; t < T; ++t)
    v[t] = amp * std::sin(2.0 * std::numbers::pi * bin * static_cast<double>(t) / static_cast<double>(T) + phase);
  return v;
}

inline std::vector<double> random_values(std::mt19937_64& rng, std::size_t T, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(T);
  for (double& x : v) x = n(rng);
  return v;
}

inline std::vector<double> constant(std::size_t T, double c) { return std::vector<double>(T, c); }

inline morphcf::TimeSeries ts(std::vector<double> v, double fs = 125.0) {
  return morphcf::TimeSeries(std::move(v), fs);
}

/// Regressor defined by an arbitrary function of the series.
struct FnRegressor final : morphcf::Regressor {
  std::function<double(const morphcf::TimeSeries&)> fn;
  explicit FnRegressor(std::function<double(const morphcf::TimeSeries&)> f) : fn(std::move(f)) {}
  double predict(const morphcf::TimeSeries& x) const override { return fn(x); }
};

inline morphcf::RegressorPtr constant_regressor(double y) {
  return std::make_shared<FnRegressor>([y](const morphcf::TimeSeries&) { return y; });
}

inline morphcf::RegressorPtr mean_regressor(double scale = 1.0) {
  return std::make_shared<FnRegressor>([scale](const morphcf::TimeSeries& x) {
    double m = 0.0;
    for (double v : x.values()) m += v;
    return scale * m / static_cast<double>(x.size());
  });
}

} // namespace testutil
