#pragma once

#include "morphcf/objectives.hpp"
#include "morphcf/operators.hpp"
#include "morphcf/regressor.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace morphcf {

struct RunConfig {
  std::size_t population = 100;
  std::size_t generations = 50;
  double p_crossover = 0.6;
  double p_mutation = 0.5;
  std::uint64_t seed = 0;
  std::size_t reference_divisions = 12;

  void validate() const;
};

/// Objective values plus feasibility, the unit of constrained domination.
struct ObjectivePoint {
  std::vector<double> values;
  bool feasible = true;
};

ObjectivePoint to_point(const ObjectiveVector& o);

/// Feasible beats infeasible; otherwise Pareto dominance on all components.
bool constrained_dominates(const ObjectivePoint& a, const ObjectivePoint& b);

using Fronts = std::vector<std::vector<std::size_t>>;

/// Partition into fronts F1, F2, ... under constrained domination. Indices in each
/// front are ascending.
Fronts non_dominated_sort(std::span<const ObjectivePoint> points);
Fronts non_dominated_sort(std::span<const ObjectiveVector> objs);

/// Das-Dennis simplex lattice: all points with coordinates i_k / divisions summing to 1.
std::vector<std::vector<double>> reference_points(std::size_t n_obj, std::size_t divisions);

/// NSGA-III survivor selection on raw objective points: fill by fronts and resolve
/// the split front by reference-direction niching. Returns the chosen indices and
/// writes each chosen index's front number (1-based) into `ranks` when given.
std::vector<std::size_t> select_indices(std::span<const ObjectivePoint> points, std::size_t P,
                                        const std::vector<std::vector<double>>& refpoints,
                                        std::uint64_t seed,
                                        std::vector<std::size_t>* ranks = nullptr);

/// Candidate-level wrapper over select_indices; survivors carry their rank.
std::vector<Candidate> environmental_select(std::vector<Candidate> pool, std::size_t P,
                                            const std::vector<std::vector<double>>& refpoints,
                                            std::uint64_t seed);

/// `count` winners of independent binary tournaments on rank, ties broken uniformly.
std::vector<Candidate> tournament_select(const std::vector<Candidate>& pop, std::size_t count,
                                         std::uint64_t seed);

/// Lebesgue measure of the union of boxes [p, ref]. Throws std::invalid_argument if
/// any point exceeds `ref` in some coordinate.
double hypervolume(const std::vector<std::vector<double>>& front, const std::vector<double>& ref);

/// Affine map of objective space onto unit ranges; zero-width ranges are left unscaled.
struct Normalizer {
  std::vector<double> lo;
  std::vector<double> hi;

  static Normalizer identity(std::size_t dims);
  static Normalizer from_points(std::span<const ObjectiveVector> objs);
  std::vector<double> apply(std::span<const double> v) const;
};

/// Mean pairwise Euclidean distance between normalized objective vectors.
double diversity_metric(std::span<const ObjectiveVector> pop, const Normalizer& norm);

/// Generational distance: mean nearest-neighbour distance from `front` to `previous`.
double convergence_metric(std::span<const ObjectiveVector> front,
                          std::span<const ObjectiveVector> previous, const Normalizer& norm);

struct GenStats {
  std::size_t generation = 0;
  double median_morph = 0.0;
  double median_maxgrad = 0.0;
  double median_out = 0.0;
  double diversity = 0.0;
  double hypervolume = 0.0;
  double convergence = 0.0;
  std::size_t archive_size = 0;
  std::size_t front_size = 0;
  std::size_t n_feasible = 0;
};

/// Feasible counterfactuals accumulated over a run, deduplicated on exact waveform
/// equality, plus the final population's first front and per-generation diagnostics.
class CfeArchive {
public:
  /// Adds a feasible, evaluated candidate. Returns false for infeasible candidates
  /// and for waveforms already present.
  bool add(const Candidate& c);

  const std::vector<Candidate>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }

  std::vector<Candidate> final_front;
  std::vector<GenStats> per_generation_stats;

private:
  std::vector<Candidate> members_;
  std::unordered_multimap<std::size_t, std::size_t> by_hash_;
};

/// Multi-objective counterfactual search for one query series.
CfeArchive run(const TimeSeries& x, const TargetSpec& target, const MorphSpec& spec,
               const ReferenceSet& refset, const RegressorPtr& regressor, const RunConfig& cfg,
               const BlendParams& blend, std::size_t gamma);

} // namespace morphcf
