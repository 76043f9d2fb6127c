#pragma once

#include "morphcf/time_series.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace morphcf {

struct TsReadOptions {
  double sample_rate_hz = kDefaultSampleRateHz; ///< not stored in `.ts` files
  std::size_t channel = 0;                      ///< dimension to keep in multivariate files
  bool zscore = false;                          ///< per-series z-score after loading
};

/// Reads a Monash/UEA `.ts` regression file: `@` header lines, then one data line
/// per instance with colon-separated dimensions and the scalar target last.
Dataset parse_ts_dataset(const std::filesystem::path& path, const TsReadOptions& opts = {});
Dataset parse_ts_dataset(std::istream& in, const TsReadOptions& opts = {},
                         const std::string& name = "anonymous");

/// Writes a univariate regression `.ts` file with full-precision values.
void write_ts_dataset(std::ostream& out, const Dataset& d);
void write_ts_dataset(const std::filesystem::path& path, const Dataset& d);

/// Per-series z-score; constant series map to all zeros.
TimeSeries zscore(const TimeSeries& x);

/// Quasi-periodic synthetic PPG. Each beat is a systolic Gaussian plus a smaller
/// dicrotic Gaussian 0.4 of a period later; the pulse train is exactly periodic at
/// 60 / heart_rate_bpm seconds. The beat phase is drawn from `seed`, as is the
/// additive Gaussian noise. Label = heart_rate_bpm.
LabeledSeries synth_ppg(double heart_rate_bpm, double duration_s, double sample_rate_hz,
                        double noise_std, std::uint64_t seed);

/// Sampling-with-replacement resample of `d`, same size, deterministic under `seed`.
Dataset train_test_split_bootstrap(const Dataset& d, std::uint64_t seed);

/// Recipe for a synthetic benchmark dataset.
struct SyntheticSpec {
  std::size_t n_train = 200;
  std::size_t n_test = 20;
  std::size_t length = 1000;
  double sample_rate_hz = kDefaultSampleRateHz;
  double label_min_bpm = 60.0;
  double label_max_bpm = 120.0;
  double noise_std = 0.003;
  double amplitude_jitter = 0.1; ///< relative per-series amplitude spread
  /// Labels in [gap_lo, gap_hi) are excluded from the training split only.
  std::optional<std::pair<double, double>> train_gap;
};

struct TrainTest {
  Dataset train;
  Dataset test;
};

TrainTest make_synthetic_benchmark(const SyntheticSpec& spec, std::uint64_t seed);

} // namespace morphcf
