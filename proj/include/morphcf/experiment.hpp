#pragma once

#include "morphcf/config.hpp"
#include "morphcf/metrics.hpp"
#include "morphcf/uncertainty.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace morphcf {

/// Loads or synthesizes the train/test split described by the config.
/// Missing files raise std::runtime_error naming the path.
TrainTest load_data(const ExperimentConfig& cfg);

/// Test indices selected by the config, ascending.
std::vector<std::size_t> select_instances(const ExperimentConfig& cfg, std::size_t n_test);

struct InstanceResult {
  std::size_t test_index = 0;
  double label = 0.0;
  double query_prediction = 0.0;
  std::uint64_t seed = 0;
  CfeArchive archive;
  EvalReport archive_report;
  std::optional<NunResult> nun;
  std::optional<EvalReport> nun_report;
  std::string nun_error;
};

/// Shared, read-only state for explaining many test instances.
struct GenerationContext {
  GenerationContext(const ExperimentConfig& cfg, TrainTest data, RegressorPtr regressor);

  const ExperimentConfig& cfg;
  TrainTest data;
  RegressorPtr regressor;
  DtwBand band;
  ReferenceSet refset;
  TrainIndex index;
  MetricConfig metrics;
};

InstanceResult generate_instance(const GenerationContext& ctx, std::size_t test_index);

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads. The first exception
/// per index is collected; returns the messages of failed indices (empty on success).
std::vector<std::pair<std::size_t, std::string>> parallel_for(std::size_t n, std::size_t workers,
                                                              const std::function<void(std::size_t)>& fn);

struct UncertaintyStudy {
  std::vector<std::size_t> test_indices;
  std::vector<InstanceUncertainty> instances;
  std::vector<std::size_t> archive_sizes;
  std::vector<BinReport> bins;
  double bandwidth = 0.0;
};

UncertaintyStudy run_uncertainty_study(const ExperimentConfig& cfg, const TrainTest& data);

/// Shortest decimal text that round-trips the double; empty for nullopt.
std::string format_number(double v);
std::string format_optional(const std::optional<double>& v);

/// Subcommands. Each returns a process exit status and reports progress on `log`.
int cmd_generate(const ExperimentConfig& cfg, std::ostream& log);
int cmd_evaluate(const std::filesystem::path& run_dir, std::ostream& log);
int cmd_uncertainty(const ExperimentConfig& cfg, std::ostream& log);
int cmd_synth(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_inspect(const std::filesystem::path& ts_path, std::size_t index, double sample_rate_hz,
                std::ostream& out);

} // namespace morphcf
