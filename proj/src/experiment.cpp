#include "morphcf/experiment.hpp"

#include "morphcf/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace morphcf {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

namespace {

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

Dataset read_ts(const fs::path& p, const TsReadOptions& opts) {
  if (!fs::exists(p)) throw std::runtime_error("dataset file not found: " + p.string());
  return parse_ts_dataset(p, opts);
}

} // namespace

TrainTest load_data(const ExperimentConfig& cfg) {
  if (cfg.dataset.source == "ts") {
    TrainTest tt{read_ts(cfg.dataset.train_path, cfg.dataset.read),
                 read_ts(cfg.dataset.test_path, cfg.dataset.read)};
    if (tt.train.empty() || tt.test.empty()) {
      throw StructuralError("train and test files must each contain at least one series");
    }
    if (tt.train.series_length() != tt.test.series_length()) {
      throw StructuralError("train and test series lengths differ");
    }
    return tt;
  }
  return make_synthetic_benchmark(cfg.dataset.synthetic, derive_seed(cfg.seed, "dataset"));
}

std::vector<std::size_t> select_instances(const ExperimentConfig& cfg, std::size_t n_test) {
  std::vector<std::size_t> out;
  if (!cfg.instances.indices.empty()) {
    for (auto i : cfg.instances.indices) {
      if (i >= n_test) {
        throw std::invalid_argument("instance index " + std::to_string(i) + " out of range (test size " +
                                    std::to_string(n_test) + ")");
      }
    }
    out = cfg.instances.indices;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  out.resize(n_test);
  std::iota(out.begin(), out.end(), 0);
  if (cfg.instances.count && *cfg.instances.count < n_test) {
    std::mt19937_64 rng(derive_seed(cfg.seed, "instances"));
    std::shuffle(out.begin(), out.end(), rng);
    out.resize(*cfg.instances.count);
    std::sort(out.begin(), out.end());
  }
  return out;
}

GenerationContext::GenerationContext(const ExperimentConfig& c, TrainTest d, RegressorPtr r)
    : cfg(c),
      data(std::move(d)),
      regressor(std::move(r)),
      band(c.band_for(data.train.series_length())),
      refset(build_reference_set(data.train, c.ssa)),
      index(data.train, band) {
  metrics.knn_k = std::min(c.metrics.knn_k, data.train.size());
  metrics.atol = c.metrics.atol;
  metrics.freq_bins = c.metrics.freq_bins;
  metrics.freq_eps = c.metrics.freq_eps;
  metrics.band = band;
}

InstanceResult generate_instance(const GenerationContext& ctx, std::size_t test_index) {
  const auto& item = ctx.data.test[test_index];
  InstanceResult r;
  r.test_index = test_index;
  r.label = item.label;
  r.query_prediction = ctx.regressor->predict(item.series);
  r.seed = derive_seed(ctx.cfg.seed, "run", test_index);
  const TargetSpec target(item.label, ctx.cfg.delta);
  RunConfig rc = ctx.cfg.run;
  rc.seed = r.seed;
  r.archive = run(item.series, target, ctx.cfg.morph, ctx.refset, ctx.regressor, rc, ctx.cfg.blend,
                  ctx.cfg.gamma);
  r.archive_report = evaluate_cfe_set(item.series, target, r.archive, ctx.index, *ctx.regressor, ctx.metrics);
  try {
    r.nun = nun_baseline(item.series, target, ctx.data.train, ctx.band);
    r.nun_report = evaluate_nun(item.series, target, *r.nun, ctx.index, *ctx.regressor, ctx.metrics);
  } catch (const NotFoundError& e) {
    r.nun_error = e.what();
  }
  return r;
}

std::vector<std::pair<std::size_t, std::string>> parallel_for(
    std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::pair<std::size_t, std::string>> failures;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        failures.emplace_back(i, e.what());
      }
    }
  };
  const std::size_t nthreads = std::max<std::size_t>(1, std::min(workers, n));
  if (nthreads == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  std::sort(failures.begin(), failures.end());
  return failures;
}

namespace {

json report_json(const EvalReport& r) {
  json members = json::array();
  for (const auto& m : r.members) {
    members.push_back({{"prediction", m.prediction},
                       {"plausibility", m.plausibility},
                       {"proximity", m.proximity},
                       {"temporal_segments", m.temporal_segments},
                       {"temporal_fraction", m.temporal_fraction},
                       {"frequency_sparsity", m.frequency_sparsity},
                       {"max_gradient", m.max_gradient}});
  }
  return {{"validity", opt_json(r.validity)},
          {"plausibility", opt_json(r.plausibility)},
          {"proximity", opt_json(r.proximity)},
          {"temporal_sparsity", opt_json(r.temporal_sparsity)},
          {"temporal_sparsity_fraction", opt_json(r.temporal_sparsity_fraction)},
          {"frequency_sparsity", opt_json(r.frequency_sparsity)},
          {"max_gradient", opt_json(r.max_gradient)},
          {"diversity", r.diversity},
          {"members", members}};
}

const std::vector<std::string> kMetricColumns = {
    "validity",           "plausibility", "proximity", "temporal_sparsity",
    "temporal_sparsity_fraction", "frequency_sparsity", "max_gradient", "diversity"};

std::vector<std::optional<double>> report_values(const EvalReport& r) {
  return {r.validity,           r.plausibility, r.proximity, r.temporal_sparsity,
          r.temporal_sparsity_fraction, r.frequency_sparsity, r.max_gradient,
          static_cast<double>(r.diversity)};
}

void write_stats_csv(const fs::path& p, const CfeArchive& a) {
  auto out = open_out(p);
  out << "generation,median_morph,median_maxgrad,median_out,diversity,hypervolume,convergence,"
         "archive_size,front_size,n_feasible\n";
  for (const auto& s : a.per_generation_stats) {
    out << s.generation << ',' << format_number(s.median_morph) << ','
        << format_number(s.median_maxgrad) << ',' << format_number(s.median_out) << ','
        << format_number(s.diversity) << ',' << format_number(s.hypervolume) << ','
        << format_number(s.convergence) << ',' << s.archive_size << ',' << s.front_size << ','
        << s.n_feasible << '\n';
  }
}

void write_archive_ts(const fs::path& p, const CfeArchive& a, const std::string& name) {
  auto out = open_out(p);
  out << "@problemName " << name << "\n@timeStamps false\n@missing false\n@univariate true\n"
         "@equalLength true\n@targetlabel true\n@data\n";
  // Label column holds the regressor prediction for each counterfactual.
  for (const auto& c : a.members()) {
    const auto v = c.waveform.values();
    for (std::size_t t = 0; t < v.size(); ++t) {
      if (t) out << ',';
      out << format_number(v[t]);
    }
    out << ':' << format_number(c.objective ? c.objective->prediction : 0.0) << '\n';
  }
}

std::string instance_dir_name(std::size_t test_index) {
  std::ostringstream ss;
  ss << "instance_";
  ss.width(4);
  ss.fill('0');
  ss << test_index;
  return ss.str();
}

void write_instance(const fs::path& dir, const InstanceResult& r) {
  fs::create_directories(dir);
  write_archive_ts(dir / "archive.ts", r.archive, instance_dir_name(r.test_index));
  write_stats_csv(dir / "stats.csv", r.archive);
  json j;
  j["test_index"] = r.test_index;
  j["label"] = r.label;
  j["query_prediction"] = r.query_prediction;
  j["seed"] = r.seed;
  j["archive_size"] = r.archive.size();
  j["final_front_size"] = r.archive.final_front.size();
  j["archive"] = report_json(r.archive_report);
  if (r.nun_report) {
    j["nun"] = report_json(*r.nun_report);
    j["nun"]["train_index"] = r.nun->index;
    j["nun"]["train_label"] = r.nun->item.label;
    j["nun"]["dtw_distance"] = r.nun->distance;
  } else {
    j["nun"] = nullptr;
    j["nun_error"] = r.nun_error;
  }
  auto out = open_out(dir / "report.json");
  out << j.dump(2) << '\n';
}

void write_seed_manifest(const fs::path& p, const ExperimentConfig& cfg,
                         const std::vector<std::size_t>& indices, bool with_bootstrap) {
  json j;
  j["master"] = cfg.seed;
  if (cfg.dataset.source == "synthetic") j["dataset"] = derive_seed(cfg.seed, "dataset");
  if (!cfg.instances.indices.empty() || cfg.instances.count) {
    j["instances"] = derive_seed(cfg.seed, "instances");
  }
  if (with_bootstrap) j["bootstrap"] = derive_seed(cfg.seed, "bootstrap");
  json runs = json::object();
  for (auto i : indices) runs[std::to_string(i)] = derive_seed(cfg.seed, "run", i);
  j["runs"] = runs;
  auto out = open_out(p);
  out << j.dump(2) << '\n';
}

void write_config_copy(const fs::path& dir, const ExperimentConfig& cfg) {
  auto out = open_out(dir / "config.json");
  out << config_to_json(cfg) << '\n';
}

} // namespace

int cmd_generate(const ExperimentConfig& cfg, std::ostream& log) {
  auto data = load_data(cfg);
  const auto indices = select_instances(cfg, data.test.size());
  const fs::path out_dir = cfg.output_dir;
  fs::create_directories(out_dir);
  write_config_copy(out_dir, cfg);
  write_seed_manifest(out_dir / "seeds.json", cfg, indices, false);

  const auto band = cfg.band_for(data.train.series_length());
  auto regressor = make_regressor(cfg.regressor, data.train, band);
  if (const auto* ridge = dynamic_cast<const RidgeDescriptorRegressor*>(regressor.get())) {
    auto out = open_out(out_dir / "regressor.json");
    ridge->save(out);
  }
  GenerationContext ctx(cfg, std::move(data), regressor);
  log << "generate: " << indices.size() << " instance(s), train " << ctx.data.train.size()
      << ", T " << ctx.data.train.series_length() << '\n';

  std::vector<std::optional<InstanceResult>> results(indices.size());
  std::mutex log_mu;
  const auto failures = parallel_for(indices.size(), cfg.workers, [&](std::size_t k) {
    auto r = generate_instance(ctx, indices[k]);
    write_instance(out_dir / instance_dir_name(indices[k]), r);
    std::lock_guard lock(log_mu);
    log << "  instance " << indices[k] << ": archive " << r.archive.size()
        << (r.nun ? "" : " (no NUN)") << '\n';
    results[k] = std::move(r);
  });

  auto csv = open_out(out_dir / "reports.csv");
  csv << "test_index,label,query_prediction,method,status";
  for (const auto& c : kMetricColumns) csv << ',' << c;
  csv << '\n';
  std::map<std::size_t, std::string> failed(failures.begin(), failures.end());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& r = results[k];
    if (!r) {
      csv << indices[k] << ",,,archive,failed" << std::string(kMetricColumns.size(), ',') << '\n';
      continue;
    }
    auto row = [&](const char* method, const char* status, const EvalReport* rep) {
      csv << r->test_index << ',' << format_number(r->label) << ','
          << format_number(r->query_prediction) << ',' << method << ',' << status;
      if (rep) {
        for (const auto& v : report_values(*rep)) csv << ',' << format_optional(v);
      } else {
        csv << std::string(kMetricColumns.size(), ',');
      }
      csv << '\n';
    };
    row("archive", "ok", &r->archive_report);
    if (r->nun_report) {
      row("nun", "ok", &*r->nun_report);
    } else {
      row("nun", "not_found", nullptr);
    }
  }
  if (!failures.empty()) {
    auto marker = open_out(out_dir / "PARTIAL");
    for (const auto& [k, msg] : failures) {
      marker << "instance " << indices[k] << ": " << msg << '\n';
      log << "error: instance " << indices[k] << ": " << msg << '\n';
    }
    log << "generate: " << failures.size() << " instance(s) failed; outputs are partial\n";
    return 1;
  }
  fs::remove(out_dir / "PARTIAL");
  log << "generate: wrote " << out_dir.string() << '\n';
  return 0;
}

int cmd_evaluate(const fs::path& run_dir, std::ostream& log) {
  if (!fs::is_directory(run_dir)) {
    throw std::runtime_error("run directory not found: " + run_dir.string());
  }
  std::vector<fs::path> reports;
  for (const auto& e : fs::directory_iterator(run_dir)) {
    if (e.is_directory() && e.path().filename().string().rfind("instance_", 0) == 0 &&
        fs::exists(e.path() / "report.json")) {
      reports.push_back(e.path() / "report.json");
    }
  }
  if (reports.empty()) {
    throw std::runtime_error("no instance reports under " + run_dir.string());
  }
  std::sort(reports.begin(), reports.end());

  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, std::vector<Acc>> acc{{"archive", std::vector<Acc>(kMetricColumns.size())},
                                              {"nun", std::vector<Acc>(kMetricColumns.size())}};
  for (const auto& p : reports) {
    std::ifstream in(p);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw std::runtime_error("malformed report " + p.string() + ": " + e.what());
    }
    for (const auto& method : {"archive", "nun"}) {
      const auto& m = j.at(method);
      for (std::size_t c = 0; c < kMetricColumns.size(); ++c) {
        const auto& col = kMetricColumns[c];
        // A missing NUN still counts as zero generated counterfactuals.
        if (m.is_null()) {
          if (col == "diversity") acc[method][c].n += 1;
          continue;
        }
        if (m.at(col).is_null()) continue;
        acc[method][c].sum += m.at(col).get<double>();
        acc[method][c].n += 1;
      }
    }
  }
  auto out = open_out(run_dir / "summary.csv");
  out << "metric,archive,nun,n_archive,n_nun\n";
  for (std::size_t c = 0; c < kMetricColumns.size(); ++c) {
    const auto& e = acc["archive"][c];
    const auto& n = acc["nun"][c];
    auto mean = [](const Acc& a) {
      return a.n ? format_number(a.sum / static_cast<double>(a.n)) : std::string();
    };
    out << kMetricColumns[c] << ',' << mean(e) << ',' << mean(n) << ',' << e.n << ',' << n.n << '\n';
  }
  log << "evaluate: " << reports.size() << " instance report(s) -> "
      << (run_dir / "summary.csv").string() << '\n';
  return 0;
}

UncertaintyStudy run_uncertainty_study(const ExperimentConfig& cfg, const TrainTest& data) {
  UncertaintyStudy s;
  s.test_indices = select_instances(cfg, data.test.size());
  const auto band = cfg.band_for(data.train.series_length());
  const auto& rc = cfg.uncertainty.regressor;
  const auto base = make_regressor(rc, data.train, band);
  const auto ensemble = fit_bootstrap_ensemble(
      data.train, cfg.uncertainty.n_boot,
      [&](const Dataset& d) { return make_regressor(rc, d, band); },
      derive_seed(cfg.seed, "bootstrap"));
  const ProfileKde kde(data.train, cfg.uncertainty.bandwidth);
  s.bandwidth = kde.bandwidth();
  const auto refset = build_reference_set(data.train, cfg.ssa);

  s.instances.resize(s.test_indices.size());
  s.archive_sizes.resize(s.test_indices.size());
  const auto failures = parallel_for(s.test_indices.size(), cfg.workers, [&](std::size_t k) {
    const auto i = s.test_indices[k];
    const auto& item = data.test[i];
    InstanceUncertainty u;
    u.label = item.label;
    const auto preds = ensemble_predict_all(ensemble, item.series);
    u.bootstrap_ci_width = central_interval_width(preds, cfg.uncertainty.level);
    RunConfig run_cfg = cfg.run;
    run_cfg.seed = derive_seed(cfg.seed, "run", i);
    const auto archive = run(item.series, TargetSpec(item.label, cfg.delta), cfg.morph, refset, base,
                             run_cfg, cfg.blend, cfg.gamma);
    u.cfe = cfe_dispersion(archive, ensemble, cfg.uncertainty.level);
    u.kde_nll = kde.nll(item.series);
    s.instances[k] = u;
    s.archive_sizes[k] = archive.size();
  });
  if (!failures.empty()) {
    throw std::runtime_error("uncertainty study failed on test instance " +
                             std::to_string(s.test_indices[failures.front().first]) + ": " +
                             failures.front().second);
  }
  s.bins = bin_report(s.instances, cfg.uncertainty.bin_edges);
  return s;
}

int cmd_uncertainty(const ExperimentConfig& cfg, std::ostream& log) {
  const auto data = load_data(cfg);
  const fs::path out_dir = cfg.output_dir;
  fs::create_directories(out_dir);
  write_config_copy(out_dir, cfg);
  write_seed_manifest(out_dir / "seeds.json", cfg, select_instances(cfg, data.test.size()), true);
  log << "uncertainty: n_boot " << cfg.uncertainty.n_boot << ", regressor "
      << cfg.uncertainty.regressor.kind << '\n';
  const auto s = run_uncertainty_study(cfg, data);

  {
    auto out = open_out(out_dir / "uncertainty_instances.csv");
    out << "test_index,label,bootstrap_ci_width,kde_nll,archive_size,cfe_mean,cfe_ci_width,cfe_variance\n";
    for (std::size_t k = 0; k < s.instances.size(); ++k) {
      const auto& u = s.instances[k];
      out << s.test_indices[k] << ',' << format_number(u.label) << ','
          << format_number(u.bootstrap_ci_width) << ',' << format_number(u.kde_nll) << ','
          << s.archive_sizes[k] << ',';
      if (u.cfe) {
        out << format_number(u.cfe->mean) << ',' << format_number(u.cfe->ci_width) << ','
            << format_number(u.cfe->variance);
      } else {
        out << ",,";
      }
      out << '\n';
    }
  }
  std::optional<std::size_t> max_nll_bin;
  for (std::size_t b = 0; b < s.bins.size(); ++b) {
    if (s.bins[b].mean_kde_nll &&
        (!max_nll_bin || *s.bins[b].mean_kde_nll > *s.bins[*max_nll_bin].mean_kde_nll)) {
      max_nll_bin = b;
    }
  }
  {
    auto out = open_out(out_dir / "bins.csv");
    out << "bin_lower,bin_upper,n,mean_label,mean_bootstrap_ci_width,mean_cfe_ci_width,"
           "mean_kde_nll,mean_cfe_variance,max_nll\n";
    for (std::size_t b = 0; b < s.bins.size(); ++b) {
      const auto& r = s.bins[b];
      out << format_number(r.lower) << ',' << format_number(r.upper) << ',' << r.n << ','
          << format_optional(r.mean_label) << ',' << format_optional(r.mean_bootstrap_ci_width)
          << ',' << format_optional(r.mean_cfe_ci_width) << ',' << format_optional(r.mean_kde_nll)
          << ',' << format_optional(r.mean_cfe_variance) << ','
          << (max_nll_bin == b ? 1 : 0) << '\n';
    }
  }
  {
    auto ci = open_out(out_dir / "plot_ci_widths.csv");
    auto dens = open_out(out_dir / "plot_density.csv");
    ci << "bin_center,mean_bootstrap_ci_width,mean_cfe_ci_width\n";
    dens << "bin_center,mean_kde_nll,mean_cfe_variance\n";
    for (const auto& r : s.bins) {
      const auto c = format_number(0.5 * (r.lower + r.upper));
      ci << c << ',' << format_optional(r.mean_bootstrap_ci_width) << ','
         << format_optional(r.mean_cfe_ci_width) << '\n';
      dens << c << ',' << format_optional(r.mean_kde_nll) << ','
           << format_optional(r.mean_cfe_variance) << '\n';
    }
  }
  if (max_nll_bin) {
    log << "uncertainty: max mean KDE NLL in bin [" << format_number(s.bins[*max_nll_bin].lower)
        << ", " << format_number(s.bins[*max_nll_bin].upper) << ")\n";
  }
  log << "uncertainty: wrote " << out_dir.string() << '\n';
  return 0;
}

int cmd_synth(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const auto tt = make_synthetic_benchmark(cfg.dataset.synthetic, derive_seed(cfg.seed, "dataset"));
  fs::create_directories(out_dir);
  write_ts_dataset(out_dir / "train.ts", tt.train);
  write_ts_dataset(out_dir / "test.ts", tt.test);
  log << "synth: " << tt.train.size() << " train / " << tt.test.size() << " test series -> "
      << out_dir.string() << '\n';
  return 0;
}

int cmd_inspect(const fs::path& ts_path, std::size_t index, double sample_rate_hz,
                std::ostream& out) {
  TsReadOptions opts;
  opts.sample_rate_hz = sample_rate_hz;
  const auto d = read_ts(ts_path, opts);
  if (index >= d.size()) {
    throw std::invalid_argument("series index " + std::to_string(index) + " out of range (" +
                                std::to_string(d.size()) + " series in " + ts_path.string() + ")");
  }
  const auto p = profile(d[index].series);
  out << "descriptor,value\n";
  for (std::size_t j = 0; j < PropertyProfile::kSize; ++j) {
    out << descriptor_name(j) << ',' << format_number(p[j]) << '\n';
  }
  out << "label," << format_number(d[index].label) << '\n';
  out << "length," << d[index].series.size() << '\n';
  return 0;
}

} // namespace morphcf
