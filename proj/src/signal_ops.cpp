#include "morphcf/signal_ops.hpp"

#include "morphcf/errors.hpp"

#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <deque>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>

namespace morphcf {

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) {
    throw std::invalid_argument("percentile: empty input");
  }
  if (!(q >= 0.0 && q <= 100.0)) {
    throw std::invalid_argument("percentile: q must lie in [0, 100]");
  }
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) {
    return sorted[sorted.size() - 1];
  }
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double percentile(std::span<const double> x, double q) {
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  return percentile_sorted(v, q);
}

namespace {

// FFTW planning is not thread-safe; execution with new-array functions is.
// Plans are created once per length and reused for the process lifetime.
class R2cPlanCache {
public:
  ~R2cPlanCache() {
    for (auto& [n, plan] : plans_) {
      fftw_destroy_plan(plan);
    }
  }

  fftw_plan get(std::size_t n) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(n); it != plans_.end()) {
      return it->second;
    }
    std::vector<double> in(n);
    std::vector<std::complex<double>> out(n / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                          reinterpret_cast<fftw_complex*>(out.data()),
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) {
      throw NumericalError("FFTW could not plan a transform of length " + std::to_string(n));
    }
    plans_.emplace(n, plan);
    return plan;
  }

private:
  std::mutex mutex_;
  std::map<std::size_t, fftw_plan> plans_;
};

R2cPlanCache& plan_cache() {
  static R2cPlanCache cache;
  return cache;
}

} // namespace

std::vector<double> dft_magnitudes(std::span<const double> x, bool mean_center) {
  const std::size_t n = x.size();
  if (n < 2) {
    throw std::invalid_argument("dft_magnitudes: need at least 2 samples");
  }
  std::vector<double> in(x.begin(), x.end());
  if (mean_center) {
    const double mean = std::accumulate(in.begin(), in.end(), 0.0) / static_cast<double>(n);
    for (double& v : in) {
      v -= mean;
    }
  }
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_execute_dft_r2c(plan_cache().get(n), in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  std::vector<double> mags(out.size());
  std::transform(out.begin(), out.end(), mags.begin(),
                 [](const std::complex<double>& c) { return std::abs(c); });
  return mags;
}

Spectrum dft_magnitudes(const TimeSeries& x, bool mean_center) {
  Spectrum s;
  s.magnitudes = dft_magnitudes(x.values(), mean_center);
  s.bin_freqs_hz.resize(s.magnitudes.size());
  const double T = static_cast<double>(x.size());
  for (std::size_t k = 0; k < s.bin_freqs_hz.size(); ++k) {
    s.bin_freqs_hz[k] = static_cast<double>(k) * x.sample_rate_hz() / T;
  }
  return s;
}

SsaConfig SsaConfig::resolved(std::size_t T) const {
  SsaConfig out = *this;
  if (out.window_len == 0) {
    out.window_len = std::min<std::size_t>(250, T / 4);
  }
  if (out.window_len < 2 || out.window_len > T / 2) {
    throw std::invalid_argument("SsaConfig: window length " + std::to_string(out.window_len) +
                                " outside [2, T/2] for T=" + std::to_string(T));
  }
  if (out.n_components == 0 || out.n_components > out.window_len) {
    throw std::invalid_argument("SsaConfig: n_components must lie in [1, L]");
  }
  return out;
}

TimeSeries ssa_reconstruct(const TimeSeries& x, const SsaConfig& cfg_in) {
  const std::size_t T = x.size();
  const SsaConfig cfg = cfg_in.resolved(T);
  const std::size_t L = cfg.window_len;
  const std::size_t K = T - L + 1;
  const double offset =
      cfg.center ? std::accumulate(x.values().begin(), x.values().end(), 0.0) / static_cast<double>(T)
                 : 0.0;
  std::vector<double> centered(x.values().begin(), x.values().end());
  for (double& c : centered) c -= offset;
  const std::span<const double> v = centered;

  // Lag-covariance S = X X^T of the Hankel trajectory matrix X(l, k) = x[l + k].
  // Its eigenvectors are the left singular vectors of X; S is built with the
  // Hankel recurrence S(i+1, j+1) = S(i, j) - x_i x_j + x_{i+K} x_{j+K}.
  Eigen::MatrixXd S(L, L);
  for (std::size_t j = 0; j < L; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      acc += v[k] * v[j + k];
    }
    S(0, j) = acc;
  }
  for (std::size_t i = 0; i + 1 < L; ++i) {
    for (std::size_t j = i; j + 1 < L; ++j) {
      S(i + 1, j + 1) = S(i, j) - v[i] * v[j] + v[i + K] * v[j + K];
    }
  }
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      S(i, j) = S(j, i);
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("ssa_reconstruct: eigendecomposition of the " + std::to_string(L) + "x" +
                         std::to_string(L) + " lag-covariance failed");
  }
  // Eigen sorts eigenvalues ascending; the leading triples are the last columns.
  const Eigen::MatrixXd U = eig.eigenvectors().rightCols(static_cast<Eigen::Index>(cfg.n_components));

  Eigen::MatrixXd X(L, K);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t k = 0; k < K; ++k) {
      X(l, k) = v[l + k];
    }
  }
  const Eigen::MatrixXd Xr = U * (U.transpose() * X);

  std::vector<double> out(T, 0.0);
  std::vector<double> counts(T, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t l = 0; l < L; ++l) {
      out[l + k] += Xr(l, k);
      counts[l + k] += 1.0;
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    out[t] = out[t] / counts[t] + offset;
    if (!std::isfinite(out[t])) {
      throw NumericalError("ssa_reconstruct: non-finite reconstruction");
    }
  }
  return TimeSeries(std::move(out), x.sample_rate_hz());
}

DtwBand default_dtw_band(std::size_t T) {
  if (T <= 512) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(T)));
}

double dtw(std::span<const double> a, std::span<const double> b, DtwBand band,
           double abandon_above) {
  return dtw(a, b, band, abandon_above, {});
}

double dtw(std::span<const double> a, std::span<const double> b, DtwBand band,
           double abandon_above, std::span<const double> remaining_lb) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == 0 || m == 0) {
    throw std::invalid_argument("dtw: empty input");
  }
  const std::size_t gap = n > m ? n - m : m - n;
  if (band && *band < gap) {
    throw std::invalid_argument("dtw: band " + std::to_string(*band) +
                                " cannot align lengths " + std::to_string(n) + " and " +
                                std::to_string(m));
  }
  const std::size_t w = band ? *band : std::max(n, m);
  constexpr double inf = std::numeric_limits<double>::infinity();

  // 1-based cost rows; index 0 is the virtual border column.
  std::vector<double> prev(m + 1, inf);
  std::vector<double> cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t jlo = i > w ? std::max<std::size_t>(1, i - w) : 1;
    const std::size_t jhi = std::min(m, i + w);
    cur[jlo - 1] = inf;
    const double ai = a[i - 1];
    const double* pp = prev.data();
    const double* bp = b.data();
    double* cp = cur.data();
    double left = cp[jlo - 1];
    double row_min = inf;
    for (std::size_t j = jlo; j <= jhi; ++j) {
      const double up = pp[j - 1] < pp[j] ? pp[j - 1] : pp[j];
      const double c = std::abs(ai - bp[j - 1]) + (up < left ? up : left);
      cp[j] = c;
      left = c;
      row_min = c < row_min ? c : row_min;
    }
    if (jhi + 1 <= m) {
      cur[jhi + 1] = inf;
    }
    const double rest = remaining_lb.empty() ? 0.0 : remaining_lb[i];
    if (row_min + rest > abandon_above) {
      return inf;
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double dtw(const TimeSeries& a, const TimeSeries& b, DtwBand band) {
  return dtw(a.values(), b.values(), band);
}

Envelope envelope(std::span<const double> s, DtwBand band) {
  const std::size_t n = s.size();
  Envelope env;
  env.upper.resize(n);
  env.lower.resize(n);
  if (!band || *band >= n) {
    const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
    std::fill(env.upper.begin(), env.upper.end(), *mx);
    std::fill(env.lower.begin(), env.lower.end(), *mn);
    return env;
  }
  const std::size_t w = *band;
  // Monotone deques over the sliding window [i - w, i + w].
  std::deque<std::size_t> maxq;
  std::deque<std::size_t> minq;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t hi = std::min(n - 1, i + w);
    while (next <= hi) {
      while (!maxq.empty() && s[maxq.back()] <= s[next]) maxq.pop_back();
      while (!minq.empty() && s[minq.back()] >= s[next]) minq.pop_back();
      maxq.push_back(next);
      minq.push_back(next);
      ++next;
    }
    const std::size_t lo = i > w ? i - w : 0;
    while (maxq.front() < lo) maxq.pop_front();
    while (minq.front() < lo) minq.pop_front();
    env.upper[i] = s[maxq.front()];
    env.lower[i] = s[minq.front()];
  }
  return env;
}

double lb_keogh(std::span<const double> query, const Envelope& env) {
  double lb = 0.0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    const double q = query[i];
    if (q > env.upper[i]) {
      lb += q - env.upper[i];
    } else if (q < env.lower[i]) {
      lb += env.lower[i] - q;
    }
  }
  return lb;
}

namespace {

using Pair = double __attribute__((vector_size(2 * sizeof(double))));
constexpr std::size_t kLanes = 4;

struct Lanes {
  Pair lo, hi;
};

inline Pair vmin(Pair a, Pair b) { return a < b ? a : b; }
inline Pair vabs(Pair a) { return a < 0.0 ? -a : a; }

// Banded DTW of one query against four equal-length candidates at once. The four
// recurrences are independent, which hides the latency of the row dependency.
// Lanes whose partial cost plus remaining bound exceeds `cutoff` report +inf.
std::array<double, kLanes> dtw_lanes(std::span<const double> a, const std::vector<Lanes>& packed,
                                     std::size_t w, double cutoff,
                                     const std::array<const double*, kLanes>& remaining) {
  const std::size_t n = a.size();
  const std::size_t m = packed.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  const Pair pinf = {inf, inf};
  const Lanes vinf{pinf, pinf};
  std::vector<Lanes> prev(m + 1, vinf);
  std::vector<Lanes> cur(m + 1, vinf);
  prev[0] = Lanes{Pair{0.0, 0.0}, Pair{0.0, 0.0}};
  std::array<bool, kLanes> dead{};
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t jlo = i > w ? std::max<std::size_t>(1, i - w) : 1;
    const std::size_t jhi = std::min(m, i + w);
    cur[jlo - 1] = vinf;
    const double ai = a[i - 1];
    Pair left_lo = pinf, left_hi = pinf;
    Pair min_lo = pinf, min_hi = pinf;
    const Lanes* pp = prev.data();
    const Lanes* bp = packed.data();
    Lanes* cp = cur.data();
    for (std::size_t j = jlo; j <= jhi; ++j) {
      const Pair up_lo = vmin(pp[j - 1].lo, pp[j].lo);
      const Pair up_hi = vmin(pp[j - 1].hi, pp[j].hi);
      const Pair c_lo = vabs(ai - bp[j - 1].lo) + vmin(up_lo, left_lo);
      const Pair c_hi = vabs(ai - bp[j - 1].hi) + vmin(up_hi, left_hi);
      cp[j].lo = c_lo;
      cp[j].hi = c_hi;
      left_lo = c_lo;
      left_hi = c_hi;
      min_lo = vmin(min_lo, c_lo);
      min_hi = vmin(min_hi, c_hi);
    }
    if (jhi + 1 <= m) cur[jhi + 1] = vinf;
    const std::array<double, kLanes> row_min{min_lo[0], min_lo[1], min_hi[0], min_hi[1]};
    bool any_alive = false;
    for (std::size_t l = 0; l < kLanes; ++l) {
      const double rest = remaining[l] ? remaining[l][i] : 0.0;
      if (row_min[l] + rest > cutoff) dead[l] = true;
      any_alive = any_alive || !dead[l];
    }
    std::swap(prev, cur);
    if (!any_alive) break;
  }
  const Lanes& last = prev[m];
  const std::array<double, kLanes> final_cost{last.lo[0], last.lo[1], last.hi[0], last.hi[1]};
  std::array<double, kLanes> out{};
  for (std::size_t l = 0; l < kLanes; ++l) out[l] = dead[l] ? inf : final_cost[l];
  return out;
}

void keogh_suffix(std::span<const double> query, const Envelope& env, std::vector<double>& suffix) {
  suffix.assign(query.size() + 1, 0.0);
  for (std::size_t t = query.size(); t-- > 0;) {
    const double q = query[t];
    const double c = q > env.upper[t] ? q - env.upper[t] : (q < env.lower[t] ? env.lower[t] - q : 0.0);
    suffix[t] = suffix[t + 1] + c;
  }
}

} // namespace

std::vector<Neighbor> dtw_knn(std::span<const double> query,
                              const std::vector<std::span<const double>>& pool,
                              const std::vector<Envelope>& envelopes, std::size_t k,
                              DtwBand band) {
  if (k == 0 || k > pool.size()) {
    throw std::invalid_argument("dtw_knn: k must lie in [1, |pool|]");
  }
  const bool have_env = envelopes.size() == pool.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t T = query.size();
  // Visit candidates in ascending lower-bound order so the cutoff tightens early.
  std::vector<std::pair<double, std::size_t>> order;
  std::vector<std::size_t> ragged; // different length from the query: no bound, scalar DTW
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].size() != T) {
      ragged.push_back(i);
    } else {
      order.emplace_back(have_env ? lb_keogh(query, envelopes[i]) : 0.0, i);
    }
  }
  std::sort(order.begin(), order.end());

  auto before = [](double d, std::size_t i, const Neighbor& n) {
    return d < n.distance || (d == n.distance && i < n.index);
  };
  std::vector<Neighbor> best; // sorted ascending by (distance, index)
  best.reserve(k + 1);
  auto offer = [&](double d, std::size_t i) {
    if (best.size() < k || before(d, i, best.back())) {
      auto pos = std::find_if(best.begin(), best.end(),
                              [&](const Neighbor& n) { return before(d, i, n); });
      best.insert(pos, Neighbor{i, d});
      if (best.size() > k) best.pop_back();
    }
  };
  auto cutoff = [&] { return best.size() < k ? inf : best.back().distance; };

  for (std::size_t i : ragged) offer(dtw(query, pool[i], band, cutoff()), i);

  if (!order.empty()) {
    const std::size_t gap_free_band = band ? *band : T;
    std::vector<Lanes> packed(T);
    std::array<std::vector<double>, kLanes> suffix;
    std::size_t next = 0;
    while (next < order.size()) {
      const double cut = cutoff();
      if (order[next].first > cut) break; // every later bound is at least as large
      std::array<std::size_t, kLanes> idx{};
      std::size_t used = 0;
      while (used < kLanes && next < order.size() && order[next].first <= cut) {
        idx[used++] = order[next++].second;
      }
      std::array<const double*, kLanes> rest{};
      for (std::size_t l = 0; l < kLanes; ++l) {
        const std::size_t src = idx[l < used ? l : 0];
        const auto b = pool[src];
        for (std::size_t t = 0; t < T; ++t) {
          Pair& slot = l < 2 ? packed[t].lo : packed[t].hi;
          slot[l % 2] = b[t];
        }
        if (have_env && l < used) {
          keogh_suffix(query, envelopes[src], suffix[l]);
          rest[l] = suffix[l].data();
        }
      }
      const auto d = dtw_lanes(query, packed, gap_free_band, cut, rest);
      for (std::size_t l = 0; l < used; ++l) offer(d[l], idx[l]);
    }
  }
  return best;
}

} // namespace morphcf
