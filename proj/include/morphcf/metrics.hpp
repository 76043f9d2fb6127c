#pragma once

#include "morphcf/nsga3.hpp"
#include "morphcf/objectives.hpp"
#include "morphcf/regressor.hpp"
#include "morphcf/signal_ops.hpp"
#include "morphcf/time_series.hpp"

#include <optional>
#include <span>
#include <vector>

namespace morphcf {

double validity(std::span<const double> preds, const TargetSpec& target);

/// Training pool with precomputed DTW envelopes, reused across kNN queries.
class TrainIndex {
public:
  TrainIndex(const Dataset& train, DtwBand band);

  const Dataset& dataset() const noexcept { return *train_; }
  DtwBand band() const noexcept { return band_; }
  std::vector<Neighbor> knn(const TimeSeries& q, std::size_t k) const;

private:
  const Dataset* train_;
  DtwBand band_;
  std::vector<std::span<const double>> pool_;
  std::vector<Envelope> envelopes_;
};

/// Fraction of the k DTW-nearest training series whose label is within delta of yhat.
double plausibility(const TimeSeries& xp, double yhat, const TrainIndex& index, std::size_t k,
                    double delta);
double plausibility(const TimeSeries& xp, double yhat, const Dataset& train, std::size_t k,
                    double delta, DtwBand band);

/// DTW(x, xp) / T.
double proximity(const TimeSeries& x, const TimeSeries& xp, DtwBand band);

/// Number of contiguous edited segments, where sample l is edited iff |x_l - xp_l| > atol.
std::size_t temporal_sparsity(std::span<const double> x, std::span<const double> xp,
                              double atol = 1e-9);
/// Fraction of edited samples under the same mask.
double temporal_sparsity_fraction(std::span<const double> x, std::span<const double> xp,
                                  double atol = 1e-9);

/// KL(h_p || h_q) after adding eps to each bin and renormalizing (nats).
double histogram_kl(std::span<const double> p, std::span<const double> q, double eps);

/// KL divergence between magnitude-level histograms of the two one-sided spectra.
double frequency_sparsity(const TimeSeries& x, const TimeSeries& xp, std::size_t n_bins = 50,
                          double eps = 1e-10);

struct NunResult {
  std::size_t index = 0;
  LabeledSeries item;
  double distance = 0.0;
};

/// Training instance with label inside the target interval closest to x under DTW.
/// Throws NotFoundError when no label lies inside the interval.
NunResult nun_baseline(const TimeSeries& x, const TargetSpec& target, const Dataset& train,
                       DtwBand band);

struct MetricConfig {
  std::size_t knn_k = 5;
  double atol = 1e-9;
  std::size_t freq_bins = 50;
  double freq_eps = 1e-10;
  DtwBand band;
};

/// Per-member detail kept for the JSON report.
struct MemberMetrics {
  double prediction = 0.0;
  double plausibility = 0.0;
  double proximity = 0.0;
  std::size_t temporal_segments = 0;
  double temporal_fraction = 0.0;
  double frequency_sparsity = 0.0;
  double max_gradient = 0.0;
};

/// Fields other than diversity are absent for an empty counterfactual set.
struct EvalReport {
  std::optional<double> validity;
  std::optional<double> plausibility;
  std::optional<double> proximity;
  std::optional<double> temporal_sparsity;          ///< mean segment count
  std::optional<double> temporal_sparsity_fraction; ///< mean fraction of edited samples
  std::optional<double> frequency_sparsity;
  std::optional<double> max_gradient;
  std::size_t diversity = 0;
  std::vector<MemberMetrics> members;
};

/// Averages the per-member metrics over a set of counterfactual waveforms.
/// Predictions are recomputed with `regressor`; diversity is the set size.
EvalReport evaluate_waveforms(const TimeSeries& x, const TargetSpec& target,
                              const std::vector<TimeSeries>& cfes, const TrainIndex& index,
                              const Regressor& regressor, const MetricConfig& cfg);

EvalReport evaluate_cfe_set(const TimeSeries& x, const TargetSpec& target,
                            const CfeArchive& archive, const TrainIndex& index,
                            const Regressor& regressor, const MetricConfig& cfg);

/// Report for the nearest-unlike-neighbour baseline. Diversity is 0 since the
/// baseline returns an existing training series rather than generated ones.
EvalReport evaluate_nun(const TimeSeries& x, const TargetSpec& target, const NunResult& nun,
                        const TrainIndex& index, const Regressor& regressor,
                        const MetricConfig& cfg);

} // namespace morphcf
