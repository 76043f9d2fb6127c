#pragma once

#include "morphcf/descriptors.hpp"
#include "morphcf/regressor.hpp"
#include "morphcf/signal_ops.hpp"
#include "morphcf/time_series.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

namespace morphcf {

/// predict(x) = scale * dominant_frequency(x); scale 60 maps Hz to bpm.
class SpectralRateRegressor final : public Regressor {
public:
  explicit SpectralRateRegressor(double scale = 60.0);
  double predict(const TimeSeries& x) const override;

private:
  double scale_;
};

/// Mean label of the k DTW-nearest training series (ties by training index).
class KnnDtwRegressor final : public Regressor {
public:
  KnnDtwRegressor(Dataset train, std::size_t k, DtwBand band);
  double predict(const TimeSeries& x) const override;

private:
  Dataset train_;
  std::size_t k_;
  DtwBand band_;
  std::vector<Envelope> envelopes_;
};

using FeatureVector = std::array<double, PropertyProfile::kSize>;

/// Per-feature z-score fitted on training profiles. Zero-variance features keep scale 1.
struct FeatureScaler {
  FeatureVector mean{};
  FeatureVector scale{};

  static FeatureScaler fit(const std::vector<FeatureVector>& rows);
  FeatureVector transform(const FeatureVector& row) const;
};

std::vector<FeatureVector> profile_features(const Dataset& d);

/// Closed-form ridge regression of the label on standardized property profiles
/// with an unpenalized intercept.
class RidgeDescriptorRegressor final : public Regressor {
public:
  /// Throws NumericalError for singular normal equations at ridge_lambda = 0.
  RidgeDescriptorRegressor(const Dataset& train, double ridge_lambda);
  RidgeDescriptorRegressor(FeatureScaler scaler, FeatureVector coef, double intercept);

  double predict(const TimeSeries& x) const override;
  double predict_features(const FeatureVector& raw) const;

  const FeatureScaler& scaler() const noexcept { return scaler_; }
  const FeatureVector& coefficients() const noexcept { return coef_; }
  double intercept() const noexcept { return intercept_; }

  /// Small JSON artifact holding scaler, coefficients and intercept.
  void save(std::ostream& out) const;
  static RidgeDescriptorRegressor load(std::istream& in);

private:
  FeatureScaler scaler_;
  FeatureVector coef_{};
  double intercept_ = 0.0;
};

/// Mean label of the k nearest training profiles in standardized feature space.
class KnnProfileRegressor final : public Regressor {
public:
  KnnProfileRegressor(const Dataset& train, std::size_t k);
  double predict(const TimeSeries& x) const override;

private:
  FeatureScaler scaler_;
  std::vector<FeatureVector> rows_;
  std::vector<double> labels_;
  std::size_t k_;
};

RegressorPtr spectral_rate_regressor(double scale = 60.0);
RegressorPtr knn_dtw_regressor(const Dataset& train, std::size_t k, DtwBand band);
RegressorPtr ridge_descriptor_regressor(const Dataset& train, double ridge_lambda);
RegressorPtr knn_profile_regressor(const Dataset& train, std::size_t k);

using RegressorFactory = std::function<RegressorPtr(const Dataset&)>;

struct Ensemble {
  std::vector<RegressorPtr> members;
  std::size_t size() const noexcept { return members.size(); }
};

/// n_boot members, each fit on an independent bootstrap resample of `train`.
Ensemble fit_bootstrap_ensemble(const Dataset& train, std::size_t n_boot,
                                const RegressorFactory& base, std::uint64_t seed);

/// One prediction per member, in member order.
std::vector<double> ensemble_predict_all(const Ensemble& e, const TimeSeries& x);

} // namespace morphcf
