#include "morphcf/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace morphcf {

ReferenceSet::ReferenceSet(std::vector<TimeSeries> members) : members_(std::move(members)) {
  if (members_.empty()) {
    throw std::invalid_argument("ReferenceSet: empty");
  }
  for (const auto& m : members_) {
    if (m.size() != members_.front().size()) {
      throw std::invalid_argument("ReferenceSet: members differ in length");
    }
  }
}

ReferenceSet build_reference_set(const Dataset& train, const SsaConfig& ssa) {
  if (train.empty()) {
    throw std::invalid_argument("build_reference_set: empty training set");
  }
  std::vector<TimeSeries> members;
  members.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    try {
      members.push_back(ssa_reconstruct(train[i].series, ssa));
    } catch (const std::exception& e) {
      throw std::runtime_error("reference set: SSA failed on training series " +
                               std::to_string(i) + ": " + e.what());
    }
  }
  return ReferenceSet(std::move(members));
}

std::vector<Candidate> init_population(const ReferenceSet& refset, std::size_t population,
                                       std::size_t gamma, std::uint64_t seed) {
  const std::size_t T = refset.series_length();
  const std::size_t wmax = T / 2;
  if (population < 2) {
    throw std::invalid_argument("init_population: population must be at least 2");
  }
  if (gamma == 0 || gamma >= wmax) {
    throw std::invalid_argument("init_population: gamma " + std::to_string(gamma) +
                                " must lie in [1, T/2) for T=" + std::to_string(T));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, refset.size() - 1);
  std::uniform_int_distribution<std::size_t> window(gamma, wmax);
  std::vector<Candidate> pop;
  pop.reserve(population);
  for (std::size_t i = 0; i < population; ++i) {
    const std::size_t idx = pick(rng);
    const std::size_t w = window(rng);
    pop.push_back(Candidate{refset[idx], w, std::nullopt, std::nullopt});
  }
  return pop;
}

std::vector<double> blend_weights(std::size_t interval_len, const BlendParams& p) {
  if (interval_len < 2) {
    throw std::invalid_argument("blend_weights: interval must span at least 2 samples");
  }
  std::vector<double> alpha(interval_len);
  const double denom = static_cast<double>(interval_len - 1);
  for (std::size_t u = 0; u < interval_len; ++u) {
    alpha[u] = p.beta * (1.0 + std::cos(p.eta * std::numbers::pi +
                                        p.nu * std::numbers::pi * static_cast<double>(u) / denom));
  }
  return alpha;
}

namespace {

// Exact when both inputs agree, and at alpha = 0 or 1.
double mix(double alpha, double own, double other) {
  return own == other ? own : alpha * own + (1.0 - alpha) * other;
}

std::size_t draw_start(std::mt19937_64& rng, std::size_t T, std::size_t w) {
  const std::size_t hi = T > w ? T - w : 0;
  return std::uniform_int_distribution<std::size_t>(0, hi)(rng);
}

// own before [b, e), blend inside, other from e on
TimeSeries blend_splice(const TimeSeries& own, const TimeSeries& other, std::size_t b,
                        std::size_t e, const BlendParams& p) {
  if (e - b < 2) {
    return own;
  }
  const auto x = own.values();
  const auto y = other.values();
  std::vector<double> out(x.size());
  const auto alpha = blend_weights(e - b, p);
  for (std::size_t t = 0; t < b; ++t) out[t] = x[t];
  for (std::size_t t = b; t < e; ++t) {
    out[t] = mix(alpha[t - b], x[t], y[t]);
  }
  for (std::size_t t = e; t < x.size(); ++t) out[t] = y[t];
  return TimeSeries(std::move(out), own.sample_rate_hz());
}

} // namespace

std::pair<Candidate, Candidate> crossover(const Candidate& a, const Candidate& b,
                                          const BlendParams& p, std::uint64_t seed) {
  const std::size_t T = a.waveform.size();
  if (b.waveform.size() != T) {
    throw std::invalid_argument("crossover: parents differ in length");
  }
  std::mt19937_64 rng(seed);
  auto child = [&](const Candidate& own, const Candidate& other) {
    const std::size_t w = own.window_len;
    const std::size_t s = draw_start(rng, T, w);
    const std::size_t begin = s > w ? s - w : 0;
    const std::size_t end = std::min(T, s + w);
    return Candidate{blend_splice(own.waveform, other.waveform, begin, end, p), w, std::nullopt,
                     std::nullopt};
  };
  Candidate c1 = child(a, b);
  Candidate c2 = child(b, a);
  return {std::move(c1), std::move(c2)};
}

Candidate mutate(const Candidate& a, const ReferenceSet& refset, const BlendParams& p,
                 std::uint64_t seed) {
  const std::size_t T = a.waveform.size();
  if (refset.series_length() != T) {
    throw std::invalid_argument("mutate: reference set length differs from candidate");
  }
  std::mt19937_64 rng(seed);
  const auto& z = refset[std::uniform_int_distribution<std::size_t>(0, refset.size() - 1)(rng)];
  const std::size_t w = a.window_len;
  const std::size_t s = draw_start(rng, T, w);
  const std::size_t e = std::min(T, s + w);
  if (e - s < 2) {
    return Candidate{a.waveform, w, std::nullopt, std::nullopt};
  }
  const auto x = a.waveform.values();
  const auto zv = z.values();
  std::vector<double> out(x.begin(), x.end());
  const auto alpha = blend_weights(e - s, p);
  for (std::size_t t = s; t < e; ++t) {
    out[t] = mix(alpha[t - s], x[t], zv[t]);
  }
  return Candidate{TimeSeries(std::move(out), a.waveform.sample_rate_hz()), w, std::nullopt,
                   std::nullopt};
}

} // namespace morphcf
