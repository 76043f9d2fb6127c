#pragma once

#include "morphcf/descriptors.hpp"
#include "morphcf/nsga3.hpp"
#include "morphcf/regressors.hpp"

#include <optional>
#include <span>
#include <vector>

namespace morphcf {

/// Width of the central `level` interval of the predictions (linear-interpolated percentiles).
double central_interval_width(std::span<const double> preds, double level = 0.95);

struct Dispersion {
  double mean = 0.0;
  double ci_width = 0.0;
  double variance = 0.0; ///< population variance
};

/// Pools predictions of every ensemble member over every counterfactual.
/// Empty input yields nullopt.
std::optional<Dispersion> cfe_dispersion(const std::vector<TimeSeries>& cfes, const Ensemble& e,
                                         double level = 0.95);
std::optional<Dispersion> cfe_dispersion(const CfeArchive& archive, const Ensemble& e,
                                         double level = 0.95);
std::optional<Dispersion> cfe_dispersion(const CfeArchive& archive, const Regressor& r,
                                         double level = 0.95);

/// Negative log density of an isotropic Gaussian KDE at `query`.
double kde_nll(const std::vector<std::vector<double>>& train, std::span<const double> query,
               double bandwidth);

/// Scott's rule on standardized features: n^(-1/(d+4)).
double scott_bandwidth(std::size_t n, std::size_t d);

/// KDE over z-scored property profiles of a training set.
class ProfileKde {
public:
  /// bandwidth <= 0 selects Scott's rule.
  explicit ProfileKde(const Dataset& train, double bandwidth = 0.0);

  double bandwidth() const noexcept { return bandwidth_; }
  double nll(const TimeSeries& x) const;

private:
  FeatureScaler scaler_;
  std::vector<std::vector<double>> rows_;
  double bandwidth_;
};

/// Per-test-instance uncertainty quantities.
struct InstanceUncertainty {
  double label = 0.0;
  double bootstrap_ci_width = 0.0;
  std::optional<Dispersion> cfe;
  double kde_nll = 0.0;
};

struct BinReport {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n = 0;
  std::optional<double> mean_label;
  std::optional<double> mean_bootstrap_ci_width;
  std::optional<double> mean_cfe_ci_width;
  std::optional<double> mean_kde_nll;
  std::optional<double> mean_cfe_variance;
};

/// One report per [edges[i], edges[i+1]) bin. Instances outside all bins are ignored.
/// CFE means skip instances whose archive was empty.
std::vector<BinReport> bin_report(const std::vector<InstanceUncertainty>& instances,
                                  std::span<const double> edges);

/// Spearman rank correlation with average ranks for ties. Needs at least 2 pairs.
double spearman(std::span<const double> a, std::span<const double> b);

} // namespace morphcf
