#pragma once

#include "morphcf/time_series.hpp"

#include <memory>

namespace morphcf {

/// Black-box regression model f: series -> scalar. Implementations must be
/// deterministic and safe to call concurrently; inputs are never modified.
class Regressor {
public:
  virtual ~Regressor() = default;
  virtual double predict(const TimeSeries& x) const = 0;
};

using RegressorPtr = std::shared_ptr<const Regressor>;

} // namespace morphcf
