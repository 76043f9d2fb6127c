#pragma once

#include "morphcf/dataset_io.hpp"
#include "morphcf/metrics.hpp"
#include "morphcf/nsga3.hpp"
#include "morphcf/objectives.hpp"
#include "morphcf/operators.hpp"
#include "morphcf/regressors.hpp"
#include "morphcf/signal_ops.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace morphcf {

struct DatasetConfig {
  std::string source = "synthetic"; ///< "synthetic" or "ts"
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  TsReadOptions read;
  SyntheticSpec synthetic;
};

struct RegressorConfig {
  std::string kind = "ridge_descriptor"; ///< ridge_descriptor | knn_profile | knn_dtw | spectral_rate
  double ridge_lambda = 1e-3;
  std::size_t k = 5;
  double scale = 60.0;
};

struct UncertaintyConfig {
  std::size_t n_boot = 20;
  std::vector<double> bin_edges;
  double bandwidth = 0.0; ///< <= 0 selects Scott's rule
  double level = 0.95;
  RegressorConfig regressor;
};

struct InstanceSelection {
  std::vector<std::size_t> indices;  ///< explicit test indices; wins over `count`
  std::optional<std::size_t> count;  ///< otherwise a seeded sample of this many
};

struct ExperimentConfig {
  DatasetConfig dataset;
  RegressorConfig regressor;
  MorphSpec morph;
  double delta = 5.0;
  RunConfig run;
  BlendParams blend;
  std::size_t gamma = 50;
  SsaConfig ssa;
  bool dtw_band_auto = true;
  std::optional<std::size_t> dtw_band; ///< used when dtw_band_auto is false
  MetricConfig metrics;
  UncertaintyConfig uncertainty;
  InstanceSelection instances;
  std::size_t workers = 1;
  std::filesystem::path output_dir = "morphcf_out";
  std::uint64_t seed = 0;

  DtwBand band_for(std::size_t T) const;
  void validate() const;
};

/// The fully commented default document.
std::string_view default_config_text();

ExperimentConfig default_config();

/// Parses a (possibly partial) JSON-with-comments document on top of the defaults.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies "dotted.key=json_value" overrides, e.g. "run.population=50".
/// Bare words that are not valid JSON are taken as strings.
ExperimentConfig apply_overrides(const ExperimentConfig& base,
                                 const std::vector<std::string>& assignments);

/// Canonical JSON dump of a config (no comments).
std::string config_to_json(const ExperimentConfig& cfg);

/// Deterministic sub-seed for a named stream and index.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

RegressorPtr make_regressor(const RegressorConfig& rc, const Dataset& train, DtwBand band);

} // namespace morphcf
