#include "morphcf/regressors.hpp"

#include "morphcf/dataset_io.hpp"
#include "morphcf/errors.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace morphcf {

SpectralRateRegressor::SpectralRateRegressor(double scale) : scale_(scale) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("SpectralRateRegressor: scale must be positive");
  }
}

double SpectralRateRegressor::predict(const TimeSeries& x) const {
  return scale_ * dominant_frequency(x);
}

KnnDtwRegressor::KnnDtwRegressor(Dataset train, std::size_t k, DtwBand band)
    : train_(std::move(train)), k_(k), band_(band) {
  if (train_.empty()) {
    throw std::invalid_argument("KnnDtwRegressor: empty training set");
  }
  if (k_ == 0 || k_ > train_.size()) {
    throw std::invalid_argument("KnnDtwRegressor: k must lie in [1, |train|]");
  }
  envelopes_.reserve(train_.size());
  for (const auto& item : train_.items()) {
    envelopes_.push_back(envelope(item.series.values(), band_));
  }
}

double KnnDtwRegressor::predict(const TimeSeries& x) const {
  std::vector<std::span<const double>> pool;
  pool.reserve(train_.size());
  for (const auto& item : train_.items()) pool.push_back(item.series.values());
  const auto nn = dtw_knn(x.values(), pool, envelopes_, k_, band_);
  double sum = 0.0;
  for (const auto& n : nn) sum += train_[n.index].label;
  return sum / static_cast<double>(nn.size());
}

FeatureScaler FeatureScaler::fit(const std::vector<FeatureVector>& rows) {
  if (rows.empty()) {
    throw std::invalid_argument("FeatureScaler: no rows");
  }
  FeatureScaler s;
  const double n = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < PropertyProfile::kSize; ++j) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[j];
    mean /= n;
    const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(),
                                              [j](const auto& a, const auto& b) { return a[j] < b[j]; });
    if ((*lo)[j] == (*hi)[j]) {
      mean = (*lo)[j]; // exact, so the standardized training column is exactly zero
    }
    double var = 0.0;
    for (const auto& r : rows) var += (r[j] - mean) * (r[j] - mean);
    const double sd = std::sqrt(var / n);
    s.mean[j] = mean;
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

FeatureVector FeatureScaler::transform(const FeatureVector& row) const {
  FeatureVector out{};
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (row[j] - mean[j]) / scale[j];
  return out;
}

std::vector<FeatureVector> profile_features(const Dataset& d) {
  std::vector<FeatureVector> rows;
  rows.reserve(d.size());
  for (const auto& item : d.items()) rows.push_back(profile(item.series).as_array());
  return rows;
}

RidgeDescriptorRegressor::RidgeDescriptorRegressor(const Dataset& train, double ridge_lambda) {
  constexpr std::size_t d = PropertyProfile::kSize;
  if (train.size() < d + 1) {
    throw std::invalid_argument("RidgeDescriptorRegressor: need at least 6 training series");
  }
  if (!(ridge_lambda >= 0.0)) {
    throw std::invalid_argument("RidgeDescriptorRegressor: ridge_lambda must be non-negative");
  }
  const auto rows = profile_features(train);
  scaler_ = FeatureScaler::fit(rows);
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(d));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto z = scaler_.transform(rows[static_cast<std::size_t>(i)]);
    for (std::size_t j = 0; j < d; ++j) X(i, static_cast<Eigen::Index>(j)) = z[j];
    y(i) = train[static_cast<std::size_t>(i)].label;
  }
  // Standardized columns are centred, so the intercept decouples as the label mean.
  // Features constant over the training set carry no information; their coefficient
  // stays 0 and they are left out of the normal equations.
  const double ybar = y.mean();
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (!X.col(j).isZero(0.0)) active.push_back(j);
  }
  coef_.fill(0.0);
  intercept_ = ybar;
  if (active.empty()) {
    return;
  }
  const auto m = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd Xa(n, m);
  for (Eigen::Index c = 0; c < m; ++c) Xa.col(c) = X.col(active[static_cast<std::size_t>(c)]);
  const Eigen::MatrixXd A = Xa.transpose() * Xa + ridge_lambda * Eigen::MatrixXd::Identity(m, m);
  const Eigen::VectorXd rhs = Xa.transpose() * (y.array() - ybar).matrix();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw NumericalError("ridge: singular normal equations (rank " + std::to_string(lu.rank()) +
                         " of " + std::to_string(m) + " non-constant features); use ridge_lambda > 0");
  }
  const Eigen::VectorXd beta = lu.solve(rhs);
  for (Eigen::Index c = 0; c < m; ++c) coef_[static_cast<std::size_t>(active[static_cast<std::size_t>(c)])] = beta(c);
}

RidgeDescriptorRegressor::RidgeDescriptorRegressor(FeatureScaler scaler, FeatureVector coef,
                                                   double intercept)
    : scaler_(scaler), coef_(coef), intercept_(intercept) {}

double RidgeDescriptorRegressor::predict_features(const FeatureVector& raw) const {
  const auto z = scaler_.transform(raw);
  double out = intercept_;
  for (std::size_t j = 0; j < z.size(); ++j) out += coef_[j] * z[j];
  return out;
}

double RidgeDescriptorRegressor::predict(const TimeSeries& x) const {
  return predict_features(profile(x).as_array());
}

void RidgeDescriptorRegressor::save(std::ostream& out) const {
  nlohmann::json j;
  j["model"] = "ridge_descriptor";
  j["features"] = {"amplitude", "dominant_frequency", "plateau", "trend", "max_gradient"};
  j["mean"] = scaler_.mean;
  j["scale"] = scaler_.scale;
  j["coefficients"] = coef_;
  j["intercept"] = intercept_;
  out << j.dump(2) << '\n';
}

RidgeDescriptorRegressor RidgeDescriptorRegressor::load(std::istream& in) {
  const auto j = nlohmann::json::parse(in);
  if (j.value("model", "") != "ridge_descriptor") {
    throw std::runtime_error("not a ridge_descriptor model artifact");
  }
  FeatureScaler s;
  s.mean = j.at("mean").get<FeatureVector>();
  s.scale = j.at("scale").get<FeatureVector>();
  return RidgeDescriptorRegressor(s, j.at("coefficients").get<FeatureVector>(),
                                  j.at("intercept").get<double>());
}

KnnProfileRegressor::KnnProfileRegressor(const Dataset& train, std::size_t k) : k_(k) {
  if (train.empty()) {
    throw std::invalid_argument("KnnProfileRegressor: empty training set");
  }
  if (k == 0 || k > train.size()) {
    throw std::invalid_argument("KnnProfileRegressor: k must lie in [1, |train|]");
  }
  const auto raw = profile_features(train);
  scaler_ = FeatureScaler::fit(raw);
  rows_.reserve(raw.size());
  for (const auto& r : raw) rows_.push_back(scaler_.transform(r));
  labels_ = train.labels();
}

double KnnProfileRegressor::predict(const TimeSeries& x) const {
  const auto q = scaler_.transform(profile(x).as_array());
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) d2 += (q[j] - rows_[i][j]) * (q[j] - rows_[i][j]);
    dist.emplace_back(d2, i);
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < k_; ++i) sum += labels_[dist[i].second];
  return sum / static_cast<double>(k_);
}

RegressorPtr spectral_rate_regressor(double scale) {
  return std::make_shared<SpectralRateRegressor>(scale);
}

RegressorPtr knn_dtw_regressor(const Dataset& train, std::size_t k, DtwBand band) {
  return std::make_shared<KnnDtwRegressor>(train, k, band);
}

RegressorPtr ridge_descriptor_regressor(const Dataset& train, double ridge_lambda) {
  return std::make_shared<RidgeDescriptorRegressor>(train, ridge_lambda);
}

RegressorPtr knn_profile_regressor(const Dataset& train, std::size_t k) {
  return std::make_shared<KnnProfileRegressor>(train, k);
}

Ensemble fit_bootstrap_ensemble(const Dataset& train, std::size_t n_boot,
                                const RegressorFactory& base, std::uint64_t seed) {
  if (n_boot < 2) {
    throw std::invalid_argument("fit_bootstrap_ensemble: n_boot must be at least 2");
  }
  std::mt19937_64 rng(seed);
  Ensemble e;
  e.members.reserve(n_boot);
  for (std::size_t b = 0; b < n_boot; ++b) {
    e.members.push_back(base(train_test_split_bootstrap(train, rng())));
  }
  return e;
}

std::vector<double> ensemble_predict_all(const Ensemble& e, const TimeSeries& x) {
  std::vector<double> out;
  out.reserve(e.size());
  for (const auto& m : e.members) out.push_back(m->predict(x));
  return out;
}

} // namespace morphcf
