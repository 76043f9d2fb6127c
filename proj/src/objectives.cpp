#include "morphcf/objectives.hpp"

#include "morphcf/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace morphcf {

void MorphSpec::validate() const {
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const auto& t = terms[j];
    if (!(t.weight > 0.0)) {
      throw std::invalid_argument("MorphSpec: weight of '" + std::string(descriptor_name(j)) +
                                  "' must be positive");
    }
    if (t.mode == MorphMode::Change && !(t.tau > 0.0)) {
      throw std::invalid_argument("MorphSpec: change threshold of '" +
                                  std::string(descriptor_name(j)) + "' must be positive");
    }
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("MorphSpec: epsilon must be positive");
  }
  if (infeasibility_penalty < 0.0) {
    throw std::invalid_argument("MorphSpec: infeasibility penalty must be non-negative");
  }
}

TargetSpec::TargetSpec(double y, double delta) : label(y), tolerance(delta) {
  if (!(delta > 0.0) || !std::isfinite(y)) {
    throw std::invalid_argument("TargetSpec: tolerance must be positive and label finite");
  }
}

bool TargetSpec::contains(double yhat) const noexcept {
  return std::abs(label - yhat) <= tolerance;
}

double normalized_deviation(const PropertyProfile& base, const PropertyProfile& cand,
                            std::size_t j, double eps) {
  return (cand[j] - base[j]) / (std::abs(base[j]) + eps);
}

double normalized_deviation(const TimeSeries& x, const TimeSeries& xp, std::size_t j, double eps) {
  return normalized_deviation(profile(x), profile(xp), j, eps);
}

double morph_loss(const PropertyProfile& base, const PropertyProfile& cand, const MorphSpec& spec) {
  double loss = 0.0;
  for (std::size_t j = 0; j < PropertyProfile::kSize; ++j) {
    const auto& term = spec.terms[j];
    const double dev = std::abs(normalized_deviation(base, cand, j, spec.epsilon));
    const double l = term.mode == MorphMode::Preserve ? dev : std::max(0.0, term.tau - dev);
    loss += term.weight * l;
  }
  return loss;
}

double morph_loss(const TimeSeries& x, const TimeSeries& xp, const MorphSpec& spec) {
  return morph_loss(profile(x), profile(xp), spec);
}

double maxgrad_objective(const TimeSeries& xp) {
  return gradient_q95(xp.values(), xp.sample_rate_hz(), /*per_second=*/false);
}

OutLoss out_loss(const TargetSpec& target, double yhat) {
  const double gap = std::abs(target.label - yhat);
  return {std::max(0.0, gap - target.tolerance), gap <= target.tolerance};
}

ObjectiveEvaluator::ObjectiveEvaluator(const TimeSeries& query, MorphSpec spec, TargetSpec target,
                                       RegressorPtr regressor)
    : query_profile_(profile(query)), spec_(spec), target_(target),
      regressor_(std::move(regressor)) {
  spec_.validate();
  if (!regressor_) {
    throw std::invalid_argument("ObjectiveEvaluator: null regressor");
  }
}

ObjectiveVector ObjectiveEvaluator::evaluate(const TimeSeries& candidate) const {
  double yhat = 0.0;
  try {
    yhat = regressor_->predict(candidate);
  } catch (const std::exception& e) {
    throw EvaluationError(std::string("regressor failed: ") + e.what());
  }
  if (!std::isfinite(yhat)) {
    throw EvaluationError("regressor returned a non-finite prediction");
  }
  ObjectiveVector o;
  o.prediction = yhat;
  o.morph = morph_loss(query_profile_, profile(candidate), spec_);
  o.maxgrad = maxgrad_objective(candidate);
  const auto out = out_loss(target_, yhat);
  o.out = out.loss;
  o.feasible = out.feasible;
  if (!o.feasible) {
    o.morph += spec_.infeasibility_penalty * o.out;
  }
  return o;
}

ObjectiveVector evaluate_candidate(const TimeSeries& x, const TimeSeries& xp, const MorphSpec& spec,
                                   const TargetSpec& target, const RegressorPtr& regressor) {
  return ObjectiveEvaluator(x, spec, target, regressor).evaluate(xp);
}

} // namespace morphcf
