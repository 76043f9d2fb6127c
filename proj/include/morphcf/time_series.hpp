#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace morphcf {

inline constexpr double kDefaultSampleRateHz = 125.0;

/// Fixed-rate univariate signal. Construction validates length >= 2, finite
/// samples and a positive sample rate, so every TimeSeries in flight is usable.
class TimeSeries {
public:
  explicit TimeSeries(std::vector<double> values, double sample_rate_hz = kDefaultSampleRateHz);

  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  double dt() const noexcept { return 1.0 / sample_rate_hz_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
  std::vector<double> values_;
  double sample_rate_hz_;
};

struct LabeledSeries {
  LabeledSeries(TimeSeries s, double y);

  TimeSeries series;
  double label;
};

/// Labelled series sharing one length and sample rate.
class Dataset {
public:
  Dataset() = default;
  Dataset(std::vector<LabeledSeries> items, std::string name = {});

  const std::vector<LabeledSeries>& items() const noexcept { return items_; }
  const LabeledSeries& operator[](std::size_t i) const { return items_[i]; }
  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  std::size_t series_length() const noexcept;
  std::vector<double> labels() const;

  /// Appends, enforcing the shared length/rate invariant.
  void push_back(LabeledSeries item);

private:
  std::vector<LabeledSeries> items_;
  std::string name_;
};

} // namespace morphcf
