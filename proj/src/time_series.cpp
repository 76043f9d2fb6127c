#include "morphcf/time_series.hpp"

#include "morphcf/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace morphcf {

TimeSeries::TimeSeries(std::vector<double> values, double sample_rate_hz)
    : values_(std::move(values)), sample_rate_hz_(sample_rate_hz) {
  if (values_.size() < 2) {
    throw std::invalid_argument("TimeSeries: need at least 2 samples, got " +
                                std::to_string(values_.size()));
  }
  if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_)) {
    throw std::invalid_argument("TimeSeries: sample rate must be positive");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw std::invalid_argument("TimeSeries: non-finite sample at index " + std::to_string(i));
    }
  }
}

LabeledSeries::LabeledSeries(TimeSeries s, double y) : series(std::move(s)), label(y) {
  if (!std::isfinite(label)) {
    throw std::invalid_argument("LabeledSeries: label must be finite");
  }
}

Dataset::Dataset(std::vector<LabeledSeries> items, std::string name) : name_(std::move(name)) {
  items_.reserve(items.size());
  for (auto& it : items) {
    push_back(std::move(it));
  }
}

std::size_t Dataset::series_length() const noexcept {
  return items_.empty() ? 0 : items_.front().series.size();
}

std::vector<double> Dataset::labels() const {
  std::vector<double> out;
  out.reserve(items_.size());
  for (const auto& it : items_) {
    out.push_back(it.label);
  }
  return out;
}

void Dataset::push_back(LabeledSeries item) {
  if (!items_.empty()) {
    const auto& first = items_.front().series;
    if (item.series.size() != first.size()) {
      throw StructuralError("dataset '" + name_ + "': series " + std::to_string(items_.size()) +
                            " has length " + std::to_string(item.series.size()) + ", expected " +
                            std::to_string(first.size()));
    }
    if (item.series.sample_rate_hz() != first.sample_rate_hz()) {
      throw StructuralError("dataset '" + name_ + "': inconsistent sample rates");
    }
  }
  items_.push_back(std::move(item));
}

} // namespace morphcf
