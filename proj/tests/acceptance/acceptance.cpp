// Acceptance checks. Usage: morphcf_acceptance [criterion...]; no arguments runs all.
// Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

#include "oracles/oracles.hpp"

#include "morphcf/config.hpp"
#include "morphcf/dataset_io.hpp"
#include "morphcf/descriptors.hpp"
#include "morphcf/errors.hpp"
#include "morphcf/experiment.hpp"
#include "morphcf/metrics.hpp"
#include "morphcf/nsga3.hpp"
#include "morphcf/objectives.hpp"
#include "morphcf/operators.hpp"
#include "morphcf/signal_ops.hpp"
#include "morphcf/uncertainty.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace morphcf;

namespace {

/// Collects failed checks for one criterion.
struct Checker {
  std::vector<std::string> failures;
  std::size_t count = 0;

  void operator()(bool ok, const std::string& what) {
    ++count;
    if (!ok) failures.push_back(what);
  }
  bool passed() const { return failures.empty(); }
};

TimeSeries ts(std::vector<double> v) { return TimeSeries(std::move(v), 125.0); }

std::vector<double> randn(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

std::vector<double> sine_at_bin(std::size_t T, double bin, double amp) {
  std::vector<double> v(T);
  for (std::size_t t = 0; t < T; ++t) v[t] = amp * std::sin(2.0 * std::numbers::pi * bin * t / double(T));
  return v;
}

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------------------

void criterion1(Checker& check, std::ostream& info) {
  // constants
  for (std::size_t T : {8u, 100u, 1000u}) {
    const auto p = profile(ts(std::vector<double>(T, 3.7)));
    check(p.amplitude == 0.0 && p.dominant_freq_hz == 0.0 && p.plateau_frac == 1.0 && p.trend_slope == 0.0 &&
              p.max_gradient == 0.0,
          "constant profile T=" + std::to_string(T));
  }
  // ramps
  std::vector<double> ramp(100);
  for (int i = 0; i < 100; ++i) ramp[i] = 2.0 * i + 7.0;
  const auto pr = profile(ts(ramp));
  check(close(pr.trend_slope, 2.0, 1e-12), "ramp slope 2");
  check(close(pr.max_gradient, 250.0, 1e-9), "ramp max gradient 2*125");
  check(close(pr.amplitude, 2.0 * 89.1, 1e-9), "ramp amplitude Q95-Q5");
  check(pr.plateau_frac == 0.4, "ramp plateau fraction 0.4");
  // single-bin sines
  for (double bin : {7.0, 40.0, 100.0}) {
    const auto x = ts(sine_at_bin(1000, bin, 3.0));
    check(close(dominant_frequency(x), bin * 125.0 / 1000.0, 1e-12), "sine bin " + std::to_string(bin) + " dominant frequency");
  }
  // a full-period sine even about the window centre has zero OLS slope
  std::vector<double> even(1000);
  for (std::size_t t = 0; t < even.size(); ++t) even[t] = 3.0 * std::cos(2 * std::numbers::pi * 7 * (t - 499.5) / 1000.0);
  check(std::fabs(trend_slope(ts(even))) < 1e-9, "even sine slope");

  // shift, scale and reversal on 100 random signals
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  std::uniform_real_distribution<double> gain(0.2, 5.0);
  std::size_t bad = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto v = randn(rng, 400);
    const auto p = profile(ts(v));
    const double c = shift(rng), a = gain(rng);
    auto s = v, k = v, r = v;
    for (double& y : s) y += c;
    for (double& y : k) y *= a;
    std::reverse(r.begin(), r.end());
    const auto ps = profile(ts(s)), pk = profile(ts(k)), pv = profile(ts(r));
    const double tol = 1e-9;
    bool ok = close(ps.amplitude, p.amplitude, tol) && ps.dominant_freq_hz == p.dominant_freq_hz &&
              ps.plateau_frac == p.plateau_frac && close(ps.trend_slope, p.trend_slope, tol) &&
              close(ps.max_gradient, p.max_gradient, tol);
    ok = ok && close(pk.amplitude, a * p.amplitude, tol * a * p.amplitude) && pk.dominant_freq_hz == p.dominant_freq_hz &&
         pk.plateau_frac == p.plateau_frac && close(pk.trend_slope, a * p.trend_slope, tol) &&
         close(pk.max_gradient, a * p.max_gradient, tol * a * p.max_gradient);
    ok = ok && close(pv.amplitude, p.amplitude, tol) && pv.dominant_freq_hz == p.dominant_freq_hz &&
         pv.plateau_frac == p.plateau_frac && close(pv.trend_slope, -p.trend_slope, tol) &&
         close(pv.max_gradient, p.max_gradient, tol);
    if (!ok) ++bad;
  }
  check(bad == 0, std::to_string(bad) + " of 100 random signals broke an invariance");
  info << "100 random signals checked";
}

// ---------------------------------------------------------------------------

void criterion2(Checker& check, std::ostream& info) {
  const BlendParams defaults;
  for (std::size_t n : {2u, 10u, 500u}) {
    const auto a = blend_weights(n, defaults);
    check(a.front() == 1.0 && a.back() == 0.0, "blend endpoints n=" + std::to_string(n));
  }

  std::mt19937_64 rng(202);
  const std::size_t T = 400;
  std::vector<TimeSeries> members;
  for (int i = 0; i < 4; ++i) {
    auto v = randn(rng, T);
    for (double& s : v) s += 10.0 * (i + 1);
    members.push_back(ts(v));
  }
  const ReferenceSet refset(members);
  std::size_t local_bad = 0, convex_bad = 0;
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t w = 30 + rep % 150;
    const Candidate a{ts(randn(rng, T)), w, std::nullopt, std::nullopt};
    const auto m = mutate(a, refset, defaults, 1000 + rep);
    std::size_t lo = T, hi = 0;
    for (std::size_t t = 0; t < T; ++t)
      if (m.waveform[t] != a.waveform[t]) lo = std::min(lo, t), hi = std::max(hi, t);
    if (lo < T && hi - lo + 1 > w) ++local_bad;

    auto bv = randn(rng, T);
    for (double& s : bv) s += 5.0;
    const Candidate b{ts(bv), std::size_t(40 + rep % 60), std::nullopt, std::nullopt};
    const auto [c1, c2] = crossover(a, b, defaults, 5000 + rep);
    for (std::size_t t = 0; t < T; ++t)
      for (const auto* c : {&c1, &c2})
        if (c->waveform[t] < std::min(a.waveform[t], b.waveform[t]) ||
            c->waveform[t] > std::max(a.waveform[t], b.waveform[t]))
          ++convex_bad;
  }
  check(local_bad == 0, "mutation changed samples outside its window");
  check(convex_bad == 0, "crossover left the parents' convex hull");

  // full generation loop, twice under one seed
  SyntheticSpec spec;
  spec.n_train = 30;
  spec.n_test = 1;
  spec.length = 500;
  const auto data = make_synthetic_benchmark(spec, 7);
  const auto ref = build_reference_set(data.train);
  const auto reg = ridge_descriptor_regressor(data.train, 1e-3);
  RunConfig rc;
  rc.population = 20;
  rc.generations = 5;
  rc.seed = 99;
  const TargetSpec target(data.test[0].label + 10.0, 5.0);
  const auto r1 = run(data.test[0].series, target, MorphSpec{}, ref, reg, rc, defaults, 25);
  const auto r2 = run(data.test[0].series, target, MorphSpec{}, ref, reg, rc, defaults, 25);
  bool same = r1.size() == r2.size() && r1.final_front.size() == r2.final_front.size() &&
              r1.per_generation_stats.size() == r2.per_generation_stats.size();
  for (std::size_t i = 0; same && i < r1.size(); ++i) same = r1.members()[i].waveform == r2.members()[i].waveform;
  for (std::size_t i = 0; same && i < r1.final_front.size(); ++i)
    same = r1.final_front[i].waveform == r2.final_front[i].waveform;
  for (std::size_t g = 0; same && g < r1.per_generation_stats.size(); ++g)
    same = r1.per_generation_stats[g].hypervolume == r2.per_generation_stats[g].hypervolume &&
           r1.per_generation_stats[g].median_morph == r2.per_generation_stats[g].median_morph;
  check(same, "two seeded runs differ");
  info << "300 mutation/crossover draws; seeded run archive " << r1.size();
}

// ---------------------------------------------------------------------------

void criterion3(Checker& check, std::ostream& info) {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<std::size_t> size(1, 200);
  std::uniform_int_distribution<int> level(0, 9);
  std::bernoulli_distribution infeasible(0.2);
  std::size_t mismatches = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = inst == 0 ? 200 : size(rng);
    const bool coarse = inst % 2 == 0;  // integer grid forces ties and duplicates
    std::vector<ObjectivePoint> pts(n);
    std::vector<oracle::Point> ref(n);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(3);
      for (double& x : v) x = coarse ? level(rng) : g(rng);
      const bool feas = inst % 5 == 4 ? !infeasible(rng) : true;
      pts[i] = ObjectivePoint{v, feas};
      ref[i] = oracle::Point{v, feas};
    }
    const auto got = non_dominated_sort(pts);
    auto want = oracle::fronts(ref);
    for (auto& f : want) std::sort(f.begin(), f.end());
    if (got != want) ++mismatches;
  }
  check(mismatches == 0, std::to_string(mismatches) + " of 50 sorts differ from brute force");

  for (const auto& [m, p] : std::vector<std::pair<std::size_t, std::size_t>>{{2, 4}, {3, 12}}) {
    const auto pts = reference_points(m, p);
    const double want = oracle::binomial(p + m - 1, m - 1);
    check(double(pts.size()) == want, "Das-Dennis count m=" + std::to_string(m) + " p=" + std::to_string(p));
  }
  check(reference_points(2, 4).size() == 5 && reference_points(3, 12).size() == 91, "Das-Dennis counts 5 and 91");
  const double hv = hypervolume({{1, 2}, {2, 1}}, {3, 3});
  check(hv == 3.0, "hypervolume example gave " + format_number(hv));
  info << "50 sorts, Das-Dennis 5/91, hypervolume " << format_number(hv);
}

// ---------------------------------------------------------------------------

ExperimentConfig benchmark_config() {
  auto cfg = apply_overrides(default_config(), {"regressor.kind=ridge_descriptor", "nsga3.population=50",
                                                "nsga3.generations=30", "delta=5"});
  cfg.workers = worker_count();
  return cfg;
}

std::vector<InstanceResult> run_benchmark(const ExperimentConfig& cfg, const GenerationContext& ctx) {
  const auto idx = select_instances(cfg, ctx.data.test.size());
  std::vector<InstanceResult> out(idx.size());
  const auto failures = parallel_for(idx.size(), cfg.workers, [&](std::size_t k) { out[k] = generate_instance(ctx, idx[k]); });
  if (!failures.empty()) throw std::runtime_error("instance " + std::to_string(failures.front().first) + ": " + failures.front().second);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Times the generation pipeline only: data, regressor fit, reference set and one
// optimizer run per test instance. Archive metric evaluation belongs to criterion 7.
void criterion4(Checker& check, std::ostream& info) {
  const auto cfg = benchmark_config();
  auto data = load_data(cfg);
  check(data.train.size() == 200 && data.test.size() == 20 && data.train.series_length() == 1000,
        "benchmark shape 200/20 x 1000");
  const auto reg = make_regressor(cfg.regressor, data.train, cfg.band_for(data.train.series_length()));
  const auto refset = build_reference_set(data.train, cfg.ssa);
  struct Run {
    std::size_t test_index;
    double label;
    CfeArchive archive;
  };
  std::vector<Run> results(data.test.size());
  const auto failures = parallel_for(results.size(), cfg.workers, [&](std::size_t i) {
    RunConfig rc = cfg.run;
    rc.seed = derive_seed(cfg.seed, "run", i);
    const TargetSpec target(data.test[i].label, cfg.delta);
    results[i] = Run{i, data.test[i].label,
                     run(data.test[i].series, target, cfg.morph, refset, reg, rc, cfg.blend, cfg.gamma)};
  });
  for (const auto& [i, msg] : failures) check(false, "instance " + std::to_string(i) + ": " + msg);
  if (!failures.empty()) return;

  double total_archive = 0.0;
  std::vector<double> at1, at30, ratios;
  std::size_t invalid = 0, hv_drops = 0;
  for (const auto& r : results) {
    const TargetSpec target(r.label, cfg.delta);
    std::vector<double> preds;
    for (const auto& m : r.archive.members()) preds.push_back(reg->predict(m.waveform));
    if (!preds.empty() && validity(preds, target) != 1.0) ++invalid;
    total_archive += double(r.archive.size());
    const auto& stats = r.archive.per_generation_stats;
    if (stats.size() != 31) {
      check(false, "instance " + std::to_string(r.test_index) + " recorded " + std::to_string(stats.size()) + " generations");
      continue;
    }
    for (std::size_t g = 1; g < stats.size(); ++g)
      if (stats[g].hypervolume < stats[g - 1].hypervolume) ++hv_drops;
    at1.push_back(stats[1].median_morph);
    at30.push_back(stats[30].median_morph);
    ratios.push_back(stats[1].median_morph > 0 ? stats[30].median_morph / stats[1].median_morph : 0.0);
  }
  const double mean_archive = total_archive / double(results.size());
  check(invalid == 0, std::to_string(invalid) + " instances with archive validity below 1");
  check(mean_archive >= 20.0, "mean archive size " + format_number(mean_archive) + " < 20");
  check(hv_drops == 0, std::to_string(hv_drops) + " hypervolume decreases");
  const double m1 = median(at1), m30 = median(at30);
  check(m30 <= 0.3 * m1, "median O_morph " + format_number(m30) + " at G=30 vs " + format_number(m1) + " at G=1");

  std::ostringstream rs;
  for (double r : ratios) rs << ' ' << std::round(r * 1000) / 1000;
  info << "validity 1.0 re-checked; mean archive " << mean_archive << "; median O_morph G1 " << m1 << " -> G30 "
       << m30 << " (ratio " << m30 / m1 << "); per-instance ratios:" << rs.str();
}

// ---------------------------------------------------------------------------

void criterion5(Checker& check, std::ostream& info) {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  std::size_t bad = 0;
  for (int pair = 0; pair < 20; ++pair) {
    const auto a = randn(rng, len(rng));
    const auto b = randn(rng, pair < 10 ? a.size() : len(rng));
    if (std::fabs(dtw(a, b) - oracle::dtw_enumerate(a, b)) > 1e-12) ++bad;
    if (a.size() == b.size())
      for (std::size_t band : {0u, 1u, 2u})
        if (std::fabs(dtw(a, b, band) - oracle::dtw_enumerate(a, b, long(band))) > 1e-12) ++bad;
  }
  check(bad == 0, std::to_string(bad) + " DTW values differ from path enumeration");

  const double kl = histogram_kl(std::vector<double>{0.5, 0.5}, std::vector<double>{0.9, 0.1}, 1e-10);
  check(std::fabs(kl - 0.5108) <= 1e-3, "KL example gave " + format_number(kl));

  const TargetSpec t(80, 5);
  check(validity(std::vector<double>{78, 82, 90}, t) == 2.0 / 3.0, "validity 2/3");
  check(validity(std::vector<double>{75, 85}, t) == 1.0, "validity closed interval");
  check(validity(std::vector<double>{90, 90}, t) == 0.0, "validity 0");

  Dataset d;
  const std::vector<double> levels{0.1, 0.2, 0.3, 0.4, 0.5, 5.0, 6.0}, labels{79, 81, 84, 90, 100, 80, 80};
  for (std::size_t i = 0; i < levels.size(); ++i) d.push_back(LabeledSeries(ts(std::vector<double>(12, levels[i])), labels[i]));
  const auto q = ts(std::vector<double>(12, 0.0));
  const double pl = plausibility(q, 80, d, 5, 5, std::nullopt);
  check(pl == 3.0 / 5.0, "plausibility 3/5 gave " + format_number(pl));
  check(plausibility(q, 95, d, 5, 5, std::nullopt) == 2.0 / 5.0, "plausibility 2/5");
  check(plausibility(q, 200, d, 5, 5, std::nullopt) == 0.0, "plausibility 0");
  info << "20 DTW pairs; KL " << kl << "; plausibility " << pl;
}

// ---------------------------------------------------------------------------

void criterion6(Checker& check, std::ostream& info) {
  auto cfg = apply_overrides(default_config(), {"dataset.synthetic.train_gap=[100,110]", "dataset.synthetic.n_test=60",
                                                "nsga3.population=50", "nsga3.generations=30"});
  cfg.workers = worker_count();
  const auto data = load_data(cfg);
  for (const auto& it : data.train.items())
    if (it.label >= 100.0 && it.label < 110.0) {
      check(false, "training split contains a label in [100,110)");
      break;
    }
  const auto study = run_uncertainty_study(cfg, data);

  std::size_t gap_bin = study.bins.size(), nll_arg = 0, var_arg = 0;
  double nll_max = -INFINITY, var_max = -INFINITY;
  std::vector<double> boot, cfe;
  std::ostringstream table;
  for (std::size_t b = 0; b < study.bins.size(); ++b) {
    const auto& bin = study.bins[b];
    if (bin.lower == 100.0 && bin.upper == 110.0) gap_bin = b;
    if (bin.mean_kde_nll && *bin.mean_kde_nll > nll_max) nll_max = *bin.mean_kde_nll, nll_arg = b;
    if (bin.mean_cfe_variance && *bin.mean_cfe_variance > var_max) var_max = *bin.mean_cfe_variance, var_arg = b;
    if (bin.mean_bootstrap_ci_width && bin.mean_cfe_ci_width) {
      boot.push_back(*bin.mean_bootstrap_ci_width);
      cfe.push_back(*bin.mean_cfe_ci_width);
    }
    table << " [" << bin.lower << ',' << bin.upper << ") n=" << bin.n << " nll=" << format_optional(bin.mean_kde_nll)
          << " var=" << format_optional(bin.mean_cfe_variance) << " boot=" << format_optional(bin.mean_bootstrap_ci_width)
          << " cfe=" << format_optional(bin.mean_cfe_ci_width) << ';';
  }
  check(gap_bin < study.bins.size() && study.bins[gap_bin].n > 0, "no test instances in [100,110)");
  check(nll_arg == gap_bin, "maximum mean KDE NLL is not in [100,110)");
  check(var_arg == gap_bin, "maximum mean CFE variance is not in [100,110)");
  const double rho = boot.size() >= 2 ? spearman(boot, cfe) : 0.0;
  check(rho > 0.0, "Spearman " + format_number(rho) + " <= 0");
  info << "Spearman " << rho << ";" << table.str();
}

// ---------------------------------------------------------------------------

void criterion7(Checker& check, std::ostream& info) {
  const auto cfg = benchmark_config();
  auto data = load_data(cfg);
  auto reg = make_regressor(cfg.regressor, data.train, cfg.band_for(data.train.series_length()));
  const GenerationContext ctx(cfg, data, reg);
  const auto results = run_benchmark(cfg, ctx);
  std::size_t min_div = SIZE_MAX;
  for (const auto& r : results) {
    const std::string id = "instance " + std::to_string(r.test_index);
    if (!r.nun || !r.nun_report) {
      check(false, id + " has no NUN: " + r.nun_error);
      continue;
    }
    const TargetSpec target(r.label, cfg.delta);
    check(target.contains(r.nun->item.label), id + " NUN label outside the target");
    check(r.nun_report->diversity == 0, id + " NUN diversity nonzero");
    check(r.archive_report.diversity > r.nun_report->diversity, id + " archive diversity does not exceed NUN");
    min_div = std::min(min_div, r.archive_report.diversity);
  }
  info << results.size() << " instances; smallest archive diversity " << min_div << "; NUN diversity 0";
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<void(Checker&, std::ostream&)> fn;
};

} // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "descriptor suite", 10, criterion1},        {2, "operator suite", 10, criterion2},
      {3, "optimizer oracle", 30, criterion3},        {4, "end-to-end generation", 300, criterion4},
      {5, "metric suite", 30, criterion5},            {6, "uncertainty pattern", 600, criterion6},
      {7, "nearest unlike neighbour baseline", 0, criterion7},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  if (wanted.empty())
    for (const auto& c : all) wanted.push_back(c.id);

  int failed = 0;
  for (int id : wanted) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const Criterion& c) { return c.id == id; });
    if (it == all.end()) {
      std::cerr << "unknown criterion " << id << '\n';
      return 2;
    }
    Checker check;
    std::ostringstream info;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      it->fn(check, info);
    } catch (const std::exception& e) {
      check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (it->limit_s > 0) check(secs < it->limit_s, "runtime " + format_number(secs) + " s over " + format_number(it->limit_s) + " s");
    const bool ok = check.passed();
    failed += ok ? 0 : 1;
    std::printf("criterion %d (%s): %s [%zu checks, %.1f s] %s\n", it->id, it->name, ok ? "PASS" : "FAIL", check.count, secs,
                info.str().c_str());
    for (const auto& f : check.failures) std::printf("  failed: %s\n", f.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
