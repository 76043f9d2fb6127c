#include "morphcf/config.hpp"
#include "morphcf/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> instances;
  std::optional<std::size_t> count;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("-c,--config", o.config_path, "JSON (with comments) experiment config");
  sub->add_option("--set", o.overrides, "Override a config field, e.g. --set nsga3.population=50");
  sub->add_option("-o,--output", o.output_dir, "Output directory");
  sub->add_option("-j,--workers", o.workers, "Worker threads across test instances");
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("--instances", o.instances, "Test indices to explain")->delimiter(',');
  sub->add_option("--count", o.count, "Explain a seeded sample of this many test instances");
}

morphcf::ExperimentConfig resolve(const CommonOptions& o) {
  auto cfg = o.config_path.empty() ? morphcf::default_config() : morphcf::load_config(o.config_path);
  cfg = morphcf::apply_overrides(cfg, o.overrides);
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (o.workers) cfg.workers = *o.workers;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.instances.empty()) cfg.instances.indices = o.instances;
  if (o.count) {
    cfg.instances.indices.clear();
    cfg.instances.count = o.count;
  }
  cfg.validate();
  return cfg;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"morphcf: morphology-constrained counterfactuals for time-series regressors"};
  app.require_subcommand(1);

  auto* dc = app.add_subcommand("default-config", "Print the commented default config");
  std::string dc_out;
  dc->add_option("-o,--output", dc_out, "Write to a file instead of stdout");

  CommonOptions gen_opts, unc_opts, syn_opts;
  auto* gen = app.add_subcommand("generate", "Generate and score counterfactuals per test instance");
  add_common(gen, gen_opts);

  auto* eval = app.add_subcommand("evaluate", "Aggregate instance reports into summary.csv");
  std::string run_dir;
  eval->add_option("run_dir", run_dir, "Output directory of a generate run")->required();

  auto* unc = app.add_subcommand("uncertainty", "Bootstrap / counterfactual dispersion study");
  add_common(unc, unc_opts);

  auto* syn = app.add_subcommand("synth", "Write a synthetic train/test pair in .ts format");
  add_common(syn, syn_opts);

  auto* insp = app.add_subcommand("inspect", "Print the property profile of one series");
  std::string ts_path;
  std::size_t index = 0;
  double rate = morphcf::kDefaultSampleRateHz;
  insp->add_option("file", ts_path, ".ts file")->required();
  insp->add_option("-i,--index", index, "Series index");
  insp->add_option("--rate", rate, "Sampling rate in Hz");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dc) {
      if (dc_out.empty()) {
        std::cout << morphcf::default_config_text();
      } else {
        std::ofstream out(dc_out);
        if (!out) throw std::runtime_error("cannot write " + dc_out);
        out << morphcf::default_config_text();
      }
      return 0;
    }
    if (*gen) return morphcf::cmd_generate(resolve(gen_opts), std::cerr);
    if (*eval) return morphcf::cmd_evaluate(run_dir, std::cerr);
    if (*unc) return morphcf::cmd_uncertainty(resolve(unc_opts), std::cerr);
    if (*syn) {
      const auto cfg = resolve(syn_opts);
      return morphcf::cmd_synth(cfg, cfg.output_dir, std::cerr);
    }
    if (*insp) return morphcf::cmd_inspect(ts_path, index, rate, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
