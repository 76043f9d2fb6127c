#pragma once

#include "morphcf/objectives.hpp"
#include "morphcf/signal_ops.hpp"
#include "morphcf/time_series.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace morphcf {

/// SSA-denoised training waveforms used for initialization and mutation.
class ReferenceSet {
public:
  explicit ReferenceSet(std::vector<TimeSeries> members);

  const std::vector<TimeSeries>& members() const noexcept { return members_; }
  const TimeSeries& operator[](std::size_t i) const { return members_[i]; }
  std::size_t size() const noexcept { return members_.size(); }
  std::size_t series_length() const noexcept { return members_.front().size(); }

private:
  std::vector<TimeSeries> members_;
};

/// A candidate counterfactual: waveform plus its edit window length.
struct Candidate {
  TimeSeries waveform;
  std::size_t window_len;
  std::optional<ObjectiveVector> objective;
  std::optional<std::size_t> rank; ///< 1 = non-dominated
};

/// Cosine cross-fade shape: alpha_u = beta * (1 + cos(eta*pi + nu*pi * u / (n - 1))).
struct BlendParams {
  double beta = 1.0;
  double eta = 0.5;
  double nu = 0.5;
};

ReferenceSet build_reference_set(const Dataset& train, const SsaConfig& ssa = {});

/// P draws with replacement from `refset`, each with a window length uniform in
/// [gamma, floor(T/2)].
std::vector<Candidate> init_population(const ReferenceSet& refset, std::size_t population,
                                       std::size_t gamma, std::uint64_t seed);

std::vector<double> blend_weights(std::size_t interval_len, const BlendParams& p);

/// Smooth blending crossover. Offspring r keeps its own parent before the blend
/// interval, cross-fades inside it and continues with the other parent after it.
/// Offspring inherit their own parent's window length.
std::pair<Candidate, Candidate> crossover(const Candidate& a, const Candidate& b,
                                          const BlendParams& p, std::uint64_t seed);

/// Cross-fades a window of `a` toward a uniformly drawn reference member; samples
/// outside [s, s + w) are untouched.
Candidate mutate(const Candidate& a, const ReferenceSet& refset, const BlendParams& p,
                 std::uint64_t seed);

} // namespace morphcf
