#include "morphcf/uncertainty.hpp"

#include "morphcf/signal_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace morphcf {

double central_interval_width(std::span<const double> preds, double level) {
  if (preds.size() < 2) {
    throw std::invalid_argument("central_interval_width: need at least 2 predictions");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("central_interval_width: level must lie in (0, 1)");
  }
  std::vector<double> s(preds.begin(), preds.end());
  std::sort(s.begin(), s.end());
  return percentile_sorted(s, (1.0 + level) / 2.0 * 100.0) -
         percentile_sorted(s, (1.0 - level) / 2.0 * 100.0);
}

namespace {

std::optional<Dispersion> summarize(std::vector<double> pooled, double level) {
  if (pooled.empty()) return std::nullopt;
  Dispersion d;
  const double n = static_cast<double>(pooled.size());
  d.mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) / n;
  double ss = 0.0;
  for (double p : pooled) ss += (p - d.mean) * (p - d.mean);
  d.variance = ss / n;
  d.ci_width = pooled.size() >= 2 ? central_interval_width(pooled, level) : 0.0;
  return d;
}

} // namespace

std::optional<Dispersion> cfe_dispersion(const std::vector<TimeSeries>& cfes, const Ensemble& e,
                                         double level) {
  std::vector<double> pooled;
  pooled.reserve(cfes.size() * e.size());
  for (const auto& xp : cfes) {
    for (const auto& m : e.members) pooled.push_back(m->predict(xp));
  }
  return summarize(std::move(pooled), level);
}

std::optional<Dispersion> cfe_dispersion(const CfeArchive& archive, const Ensemble& e,
                                         double level) {
  std::vector<TimeSeries> cfes;
  for (const auto& c : archive.members()) cfes.push_back(c.waveform);
  return cfe_dispersion(cfes, e, level);
}

std::optional<Dispersion> cfe_dispersion(const CfeArchive& archive, const Regressor& r,
                                         double level) {
  std::vector<double> pooled;
  for (const auto& c : archive.members()) pooled.push_back(r.predict(c.waveform));
  return summarize(std::move(pooled), level);
}

double kde_nll(const std::vector<std::vector<double>>& train, std::span<const double> query,
               double bandwidth) {
  if (train.empty()) {
    throw std::invalid_argument("kde_nll: empty training features");
  }
  if (!(bandwidth > 0.0)) {
    throw std::invalid_argument("kde_nll: bandwidth must be positive");
  }
  const std::size_t d = query.size();
  const double h2 = bandwidth * bandwidth;
  std::vector<double> logk;
  logk.reserve(train.size());
  for (const auto& row : train) {
    if (row.size() != d) {
      throw std::invalid_argument("kde_nll: feature dimension mismatch");
    }
    double r2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) r2 += (query[j] - row[j]) * (query[j] - row[j]);
    logk.push_back(-0.5 * r2 / h2);
  }
  const double mx = *std::max_element(logk.begin(), logk.end());
  double s = 0.0;
  for (double v : logk) s += std::exp(v - mx);
  const double log_norm =
      -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * h2);
  const double log_density = mx + std::log(s) - std::log(static_cast<double>(train.size())) + log_norm;
  return -log_density;
}

double scott_bandwidth(std::size_t n, std::size_t d) {
  if (n == 0) throw std::invalid_argument("scott_bandwidth: n must be positive");
  return std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
}

ProfileKde::ProfileKde(const Dataset& train, double bandwidth) {
  const auto raw = profile_features(train);
  scaler_ = FeatureScaler::fit(raw);
  rows_.reserve(raw.size());
  for (const auto& r : raw) {
    const auto z = scaler_.transform(r);
    rows_.emplace_back(z.begin(), z.end());
  }
  bandwidth_ = bandwidth > 0.0 ? bandwidth : scott_bandwidth(raw.size(), PropertyProfile::kSize);
}

double ProfileKde::nll(const TimeSeries& x) const {
  const auto z = scaler_.transform(profile(x).as_array());
  return kde_nll(rows_, z, bandwidth_);
}

std::vector<BinReport> bin_report(const std::vector<InstanceUncertainty>& instances,
                                  std::span<const double> edges) {
  if (edges.size() < 2) {
    throw std::invalid_argument("bin_report: need at least two edges");
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw std::invalid_argument("bin_report: edges must be strictly increasing");
    }
  }
  std::vector<BinReport> out(edges.size() - 1);
  struct Acc {
    double label = 0, boot = 0, nll = 0, cfe_w = 0, cfe_v = 0;
    std::size_t n_cfe = 0;
  };
  std::vector<Acc> acc(out.size());
  for (std::size_t b = 0; b < out.size(); ++b) {
    out[b].lower = edges[b];
    out[b].upper = edges[b + 1];
  }
  for (const auto& inst : instances) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), inst.label);
    if (it == edges.begin() || it == edges.end()) continue;
    const auto b = static_cast<std::size_t>(it - edges.begin()) - 1;
    out[b].n += 1;
    acc[b].label += inst.label;
    acc[b].boot += inst.bootstrap_ci_width;
    acc[b].nll += inst.kde_nll;
    if (inst.cfe) {
      acc[b].cfe_w += inst.cfe->ci_width;
      acc[b].cfe_v += inst.cfe->variance;
      acc[b].n_cfe += 1;
    }
  }
  for (std::size_t b = 0; b < out.size(); ++b) {
    if (out[b].n == 0) continue;
    const double n = static_cast<double>(out[b].n);
    out[b].mean_label = acc[b].label / n;
    out[b].mean_bootstrap_ci_width = acc[b].boot / n;
    out[b].mean_kde_nll = acc[b].nll / n;
    if (acc[b].n_cfe > 0) {
      const double m = static_cast<double>(acc[b].n_cfe);
      out[b].mean_cfe_ci_width = acc[b].cfe_w / m;
      out[b].mean_cfe_variance = acc[b].cfe_v / m;
    }
  }
  return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
    i = j + 1;
  }
  return r;
}

} // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("spearman: need two equal-length sequences of size >= 2");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

} // namespace morphcf
