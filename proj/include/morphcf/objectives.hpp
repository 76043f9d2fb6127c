#pragma once

#include "morphcf/descriptors.hpp"
#include "morphcf/regressor.hpp"
#include "morphcf/time_series.hpp"

#include <array>
#include <cstddef>

namespace morphcf {

enum class MorphMode { Preserve, Change };

struct MorphTerm {
  MorphMode mode = MorphMode::Preserve;
  double weight = 1.0;
  double tau = 0.0; ///< minimum relative change, used by Change terms only
};

/// Per-descriptor preserve/change configuration of the morphology loss.
struct MorphSpec {
  std::array<MorphTerm, PropertyProfile::kSize> terms{
      MorphTerm{MorphMode::Preserve, 1.0, 0.0}, MorphTerm{MorphMode::Preserve, 1.0, 0.0},
      MorphTerm{MorphMode::Preserve, 1.0, 0.0}, MorphTerm{MorphMode::Preserve, 0.5, 0.0},
      MorphTerm{MorphMode::Preserve, 0.5, 0.0}};
  double epsilon = 1e-8;
  /// Additive morph penalty per unit of out-of-interval error for infeasible candidates.
  double infeasibility_penalty = 10.0;

  /// Throws std::invalid_argument on non-positive weights, epsilon or change thresholds.
  void validate() const;
};

/// Desired outcome interval [label - tolerance, label + tolerance].
struct TargetSpec {
  double label = 0.0;
  double tolerance = 5.0;

  TargetSpec(double y, double delta);
  double lower() const noexcept { return label - tolerance; }
  double upper() const noexcept { return label + tolerance; }
  bool contains(double yhat) const noexcept;
};

struct ObjectiveVector {
  double morph = 0.0;
  double maxgrad = 0.0;
  double out = 0.0;
  bool feasible = false;
  double prediction = 0.0; ///< regressor output the vector was built from

  std::array<double, 3> values() const { return {morph, maxgrad, out}; }
};

/// (phi_j(xp) - phi_j(x)) / (|phi_j(x)| + eps). No clamping for tiny denominators.
double normalized_deviation(const PropertyProfile& base, const PropertyProfile& cand, std::size_t j,
                            double eps);
double normalized_deviation(const TimeSeries& x, const TimeSeries& xp, std::size_t j, double eps);

double morph_loss(const PropertyProfile& base, const PropertyProfile& cand, const MorphSpec& spec);
double morph_loss(const TimeSeries& x, const TimeSeries& xp, const MorphSpec& spec);

/// Q95 of raw |x'_t - x'_{t-1}| (no sample-rate scaling).
double maxgrad_objective(const TimeSeries& xp);

struct OutLoss {
  double loss;
  bool feasible;
};

/// Hinge max(0, |y - yhat| - delta); feasible iff |y - yhat| <= delta.
OutLoss out_loss(const TargetSpec& target, double yhat);

/// Scores candidates against one query series. The query profile is computed once.
class ObjectiveEvaluator {
public:
  ObjectiveEvaluator(const TimeSeries& query, MorphSpec spec, TargetSpec target,
                     RegressorPtr regressor);

  /// Throws EvaluationError when the regressor fails or returns a non-finite value.
  ObjectiveVector evaluate(const TimeSeries& candidate) const;

  const TargetSpec& target() const noexcept { return target_; }
  const PropertyProfile& query_profile() const noexcept { return query_profile_; }
  const Regressor& regressor() const noexcept { return *regressor_; }

private:
  PropertyProfile query_profile_;
  MorphSpec spec_;
  TargetSpec target_;
  RegressorPtr regressor_;
};

ObjectiveVector evaluate_candidate(const TimeSeries& x, const TimeSeries& xp, const MorphSpec& spec,
                                   const TargetSpec& target, const RegressorPtr& regressor);

} // namespace morphcf
