#include "morphcf/metrics.hpp"

#include "morphcf/descriptors.hpp"
#include "morphcf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace morphcf {

double validity(std::span<const double> preds, const TargetSpec& target) {
  if (preds.empty()) {
    throw std::invalid_argument("validity: no predictions");
  }
  const auto hits = std::count_if(preds.begin(), preds.end(),
                                  [&](double p) { return target.contains(p); });
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

TrainIndex::TrainIndex(const Dataset& train, DtwBand band) : train_(&train), band_(band) {
  pool_.reserve(train.size());
  envelopes_.reserve(train.size());
  for (const auto& item : train.items()) {
    pool_.push_back(item.series.values());
    envelopes_.push_back(envelope(item.series.values(), band));
  }
}

std::vector<Neighbor> TrainIndex::knn(const TimeSeries& q, std::size_t k) const {
  return dtw_knn(q.values(), pool_, envelopes_, k, band_);
}

double plausibility(const TimeSeries& xp, double yhat, const TrainIndex& index, std::size_t k,
                    double delta) {
  if (k == 0 || k > index.dataset().size()) {
    throw std::invalid_argument("plausibility: k must lie in [1, |train|]");
  }
  const auto nn = index.knn(xp, k);
  std::size_t hits = 0;
  for (const auto& n : nn) {
    if (std::abs(index.dataset()[n.index].label - yhat) <= delta) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

double plausibility(const TimeSeries& xp, double yhat, const Dataset& train, std::size_t k,
                    double delta, DtwBand band) {
  return plausibility(xp, yhat, TrainIndex(train, band), k, delta);
}

double proximity(const TimeSeries& x, const TimeSeries& xp, DtwBand band) {
  if (x.size() != xp.size()) {
    throw std::invalid_argument("proximity: length mismatch");
  }
  return dtw(x, xp, band) / static_cast<double>(x.size());
}

namespace {

void check_same_length(std::span<const double> x, std::span<const double> xp, const char* who) {
  if (x.size() != xp.size()) {
    throw std::invalid_argument(std::string(who) + ": length mismatch");
  }
}

} // namespace

std::size_t temporal_sparsity(std::span<const double> x, std::span<const double> xp, double atol) {
  check_same_length(x, xp, "temporal_sparsity");
  std::size_t edges = 0;
  bool prev = false;
  for (std::size_t l = 0; l < x.size(); ++l) {
    const bool cur = std::abs(x[l] - xp[l]) > atol;
    if (cur && !prev) ++edges;
    prev = cur;
  }
  return edges;
}

double temporal_sparsity_fraction(std::span<const double> x, std::span<const double> xp,
                                  double atol) {
  check_same_length(x, xp, "temporal_sparsity_fraction");
  if (x.empty()) return 0.0;
  std::size_t n = 0;
  for (std::size_t l = 0; l < x.size(); ++l) {
    if (std::abs(x[l] - xp[l]) > atol) ++n;
  }
  return static_cast<double>(n) / static_cast<double>(x.size());
}

double histogram_kl(std::span<const double> p, std::span<const double> q, double eps) {
  if (p.size() != q.size() || p.empty()) {
    throw std::invalid_argument("histogram_kl: histograms must be non-empty and equal-sized");
  }
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i] + eps;
    sq += q[i] + eps;
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double hp = (p[i] + eps) / sp;
    const double hq = (q[i] + eps) / sq;
    kl += hp * std::log(hp / hq);
  }
  // Rounding can leave a tiny negative for identical inputs.
  return std::max(kl, 0.0);
}

double frequency_sparsity(const TimeSeries& x, const TimeSeries& xp, std::size_t n_bins,
                          double eps) {
  if (x.size() != xp.size()) {
    throw std::invalid_argument("frequency_sparsity: length mismatch");
  }
  if (n_bins < 2) {
    throw std::invalid_argument("frequency_sparsity: n_bins must be at least 2");
  }
  const auto mx = dft_magnitudes(x.values());
  const auto mp = dft_magnitudes(xp.values());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* m : {&mx, &mp}) {
    for (double v : *m) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  std::vector<double> hx(n_bins, 0.0), hp(n_bins, 0.0);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  auto bin_of = [&](double v) -> std::size_t {
    if (!(width > 0.0)) return 0;
    const auto b = static_cast<std::size_t>((v - lo) / width);
    return std::min(b, n_bins - 1);
  };
  for (double v : mx) hx[bin_of(v)] += 1.0;
  for (double v : mp) hp[bin_of(v)] += 1.0;
  return histogram_kl(hx, hp, eps);
}

NunResult nun_baseline(const TimeSeries& x, const TargetSpec& target, const Dataset& train,
                       DtwBand band) {
  std::optional<NunResult> best;
  double cutoff = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (!target.contains(train[i].label)) continue;
    const double d = dtw(x.values(), train[i].series.values(), band, cutoff);
    if (!best || d < best->distance) {
      best = NunResult{i, train[i], d};
      cutoff = d;
    }
  }
  if (!best) {
    throw NotFoundError("nun_baseline: no training label inside [" +
                        std::to_string(target.lower()) + ", " + std::to_string(target.upper()) +
                        "]");
  }
  return *best;
}

namespace {

MemberMetrics member_metrics(const TimeSeries& x, const TimeSeries& xp, double yhat,
                             const TargetSpec& target, const TrainIndex& index,
                             const MetricConfig& cfg) {
  MemberMetrics m;
  m.prediction = yhat;
  m.plausibility = plausibility(xp, yhat, index, cfg.knn_k, target.tolerance);
  m.proximity = proximity(x, xp, cfg.band);
  m.temporal_segments = temporal_sparsity(x.values(), xp.values(), cfg.atol);
  m.temporal_fraction = temporal_sparsity_fraction(x.values(), xp.values(), cfg.atol);
  m.frequency_sparsity = frequency_sparsity(x, xp, cfg.freq_bins, cfg.freq_eps);
  m.max_gradient = maxgrad_objective(xp);
  return m;
}

void fill_means(EvalReport& r, const TargetSpec& target) {
  if (r.members.empty()) return;
  const double n = static_cast<double>(r.members.size());
  double pl = 0, pr = 0, ts = 0, tf = 0, fs = 0, mg = 0;
  std::vector<double> preds;
  for (const auto& m : r.members) {
    preds.push_back(m.prediction);
    pl += m.plausibility;
    pr += m.proximity;
    ts += static_cast<double>(m.temporal_segments);
    tf += m.temporal_fraction;
    fs += m.frequency_sparsity;
    mg += m.max_gradient;
  }
  r.validity = validity(preds, target);
  r.plausibility = pl / n;
  r.proximity = pr / n;
  r.temporal_sparsity = ts / n;
  r.temporal_sparsity_fraction = tf / n;
  r.frequency_sparsity = fs / n;
  r.max_gradient = mg / n;
}

} // namespace

EvalReport evaluate_waveforms(const TimeSeries& x, const TargetSpec& target,
                              const std::vector<TimeSeries>& cfes, const TrainIndex& index,
                              const Regressor& regressor, const MetricConfig& cfg) {
  EvalReport r;
  r.diversity = cfes.size();
  r.members.reserve(cfes.size());
  for (const auto& xp : cfes) {
    r.members.push_back(member_metrics(x, xp, regressor.predict(xp), target, index, cfg));
  }
  fill_means(r, target);
  return r;
}

EvalReport evaluate_cfe_set(const TimeSeries& x, const TargetSpec& target,
                            const CfeArchive& archive, const TrainIndex& index,
                            const Regressor& regressor, const MetricConfig& cfg) {
  std::vector<TimeSeries> cfes;
  cfes.reserve(archive.size());
  for (const auto& c : archive.members()) cfes.push_back(c.waveform);
  return evaluate_waveforms(x, target, cfes, index, regressor, cfg);
}

EvalReport evaluate_nun(const TimeSeries& x, const TargetSpec& target, const NunResult& nun,
                        const TrainIndex& index, const Regressor& regressor,
                        const MetricConfig& cfg) {
  EvalReport r = evaluate_waveforms(x, target, {nun.item.series}, index, regressor, cfg);
  r.diversity = 0;
  return r;
}

} // namespace morphcf
