#pragma once

#include "morphcf/time_series.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace morphcf {

/// Linear-interpolation percentile, q in [0, 100]. Position p = q/100 * (n-1).
double percentile(std::span<const double> x, double q);

/// Same estimator on an already ascending-sorted sample; no copy.
double percentile_sorted(std::span<const double> sorted, double q);

/// One-sided DFT magnitude spectrum on the grid f_k = k * fs / T, k = 0..floor(T/2).
struct Spectrum {
  std::vector<double> bin_freqs_hz;
  std::vector<double> magnitudes;
};

/// |sum_t x_t exp(-i 2 pi k t / T)| for k = 0..floor(T/2). Demeans first when
/// `mean_center` is set. Backed by FFTW; safe to call concurrently.
Spectrum dft_magnitudes(const TimeSeries& x, bool mean_center = true);
std::vector<double> dft_magnitudes(std::span<const double> x, bool mean_center = true);

struct SsaConfig {
  std::size_t window_len = 0; ///< L; 0 selects the default min(250, floor(T/4)).
  std::size_t n_components = 2;
  /// Subtract the series mean before embedding and add it back afterwards, so the
  /// leading components describe the oscillation rather than the offset.
  bool center = true;

  /// Resolves window_len for a series of length T and validates 2 <= L <= T/2.
  SsaConfig resolved(std::size_t T) const;
};

/// Singular spectrum analysis: embed into the L x K trajectory matrix, keep the
/// leading `n_components` singular triples, and diagonal-average back to length T.
TimeSeries ssa_reconstruct(const TimeSeries& x, const SsaConfig& cfg = {});

/// Sakoe-Chiba half-width. `std::nullopt` means unconstrained.
using DtwBand = std::optional<std::size_t>;

/// Default band for length-T series: unconstrained up to 512 samples, ceil(0.1 T) above.
DtwBand default_dtw_band(std::size_t T);

/// Minimal cumulative |a_i - b_j| alignment cost under the match/insert/delete step
/// pattern. Throws std::invalid_argument if the band cannot reach the final cell.
/// When the running cost of every cell in a row exceeds `abandon_above`, returns +inf.
double dtw(std::span<const double> a, std::span<const double> b, DtwBand band = std::nullopt,
           double abandon_above = std::numeric_limits<double>::infinity());

/// Same as above with a suffix lower bound: remaining_lb[i] bounds the cost still
/// to be paid in rows i..n-1 of `a` (size n + 1, remaining_lb[n] = 0). Tightens
/// early abandoning without changing any non-abandoned result.
double dtw(std::span<const double> a, std::span<const double> b, DtwBand band,
           double abandon_above, std::span<const double> remaining_lb);

double dtw(const TimeSeries& a, const TimeSeries& b, DtwBand band = std::nullopt);

/// Upper/lower running envelope of `s` over +-`radius` samples (LB_Keogh support).
struct Envelope {
  std::vector<double> upper;
  std::vector<double> lower;
};
Envelope envelope(std::span<const double> s, DtwBand band);

/// LB_Keogh under the absolute-difference cost: a lower bound on dtw(query, s)
/// for equal-length series when `env` is the envelope of `s` with the same band.
double lb_keogh(std::span<const double> query, const Envelope& env);

struct Neighbor {
  std::size_t index;
  double distance;
};

/// k DTW-nearest members of `pool` to `query`, ascending by distance, ties broken
/// by lower index. Uses envelope pruning and early abandoning; the result is
/// identical to exhaustive search.
std::vector<Neighbor> dtw_knn(std::span<const double> query,
                              const std::vector<std::span<const double>>& pool,
                              const std::vector<Envelope>& envelopes, std::size_t k,
                              DtwBand band);

} // namespace morphcf
