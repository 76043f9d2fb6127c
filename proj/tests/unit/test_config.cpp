#include "helpers.hpp"

#include "morphcf/config.hpp"
#include "morphcf/dataset_io.hpp"

#include <doctest.h>

#include <set>
#include <stdexcept>

using namespace morphcf;

TEST_SUITE("config") {

TEST_CASE("defaults") {
  const auto c = default_config();
  CHECK(c.run.population == 100);
  CHECK(c.run.generations == 50);
  CHECK(c.run.p_crossover == 0.6);
  CHECK(c.run.p_mutation == 0.5);
  CHECK(c.run.reference_divisions == 12);
  CHECK(c.gamma == 50);
  CHECK(c.blend.beta == 1.0);
  CHECK(c.blend.eta == 0.5);
  CHECK(c.blend.nu == 0.5);
  CHECK(c.delta == 5.0);
  const double weights[] = {1.0, 1.0, 1.0, 0.5, 0.5};
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(c.morph.terms[j].mode == MorphMode::Preserve);
    CHECK(c.morph.terms[j].weight == weights[j]);
  }
  CHECK(c.morph.epsilon == 1e-8);
  CHECK(c.morph.infeasibility_penalty == 10.0);
  CHECK(c.metrics.knn_k == 5);
  CHECK(c.metrics.freq_bins == 50);
  CHECK(c.metrics.atol == 1e-9);
  CHECK(c.metrics.freq_eps == 1e-10);
  CHECK(c.uncertainty.n_boot == 20);
  CHECK(c.uncertainty.level == 0.95);
  CHECK(c.ssa.n_components == 2);
  CHECK(c.ssa.window_len == 0);
  CHECK(c.dataset.read.sample_rate_hz == 125.0);
  CHECK(c.dtw_band_auto);
  CHECK(c.regressor.kind == "ridge_descriptor");
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("partial documents with comments merge onto defaults") {
  const auto c = parse_config(R"({
    // smaller run
    "nsga3": { "population": 50, "generations": 30 },
    "dataset": { "synthetic": { "train_gap": [100, 110] } },
    "morph": { "terms": [
      { "descriptor": "amplitude", "mode": "preserve", "weight": 1.0, "tau": 0.0 },
      { "descriptor": "dominant_frequency", "mode": "preserve", "weight": 1.0, "tau": 0.0 },
      { "descriptor": "plateau", "mode": "preserve", "weight": 1.0, "tau": 0.0 },
      { "descriptor": "trend", "mode": "change", "weight": 2.0, "tau": 0.2 },
      { "descriptor": "max_gradient", "mode": "preserve", "weight": 0.5, "tau": 0.0 }
    ] },
    "dtw_band": 25
  })");
  CHECK(c.run.population == 50);
  CHECK(c.run.generations == 30);
  CHECK(c.run.p_crossover == 0.6);
  REQUIRE(c.dataset.synthetic.train_gap.has_value());
  CHECK(c.dataset.synthetic.train_gap->first == 100.0);
  CHECK(c.morph.terms[3].mode == MorphMode::Change);
  CHECK(c.morph.terms[3].weight == 2.0);
  CHECK(c.morph.terms[3].tau == 0.2);
  CHECK(c.morph.terms[0].weight == 1.0);
  CHECK_FALSE(c.dtw_band_auto);
  CHECK(c.band_for(4000).value() == 25);
}

TEST_CASE("invalid documents are rejected") {
  CHECK_THROWS(parse_config(R"({ "nsga3": { "populaton": 50 } })"));
  CHECK_THROWS(parse_config(R"({ "delta": -1 })"));
  CHECK_THROWS(parse_config(R"({ "nsga3": { "population": 7 } })"));
  CHECK_THROWS(parse_config(R"({ "regressor": { "kind": "inception" } })"));
  CHECK_THROWS(parse_config("{ not json"));
  CHECK_THROWS(parse_config(R"({ "morph": { "terms": [ { "descriptor": "heart", "mode": "preserve" } ] } })"));
  CHECK_THROWS(parse_config(R"({ "morph": { "terms": [ { "descriptor": "trend", "mode": "change", "tau": 0.2 } ] } })"));
  CHECK_THROWS(parse_config(R"({ "dataset": { "source": "ts" } })"));
}

TEST_CASE("dotted overrides") {
  const auto c = apply_overrides(default_config(), {"nsga3.population=40", "dataset.source=ts", "dataset.train_path=a.ts",
                                                    "dataset.test_path=b.ts", "delta=2.5",
                                                    "dtw_band=null", "instances.indices=[3,1]"});
  CHECK(c.run.population == 40);
  CHECK(c.dataset.source == "ts");
  CHECK(c.dataset.train_path == "a.ts");
  CHECK(c.delta == 2.5);
  CHECK_FALSE(c.dtw_band_auto);
  CHECK_FALSE(c.band_for(4000).has_value());
  CHECK(c.instances.indices == std::vector<std::size_t>{3, 1});
  CHECK_THROWS(apply_overrides(default_config(), {"nsga3.pop=40"}));
  CHECK_THROWS(apply_overrides(default_config(), {"no_equals_sign"}));
}

TEST_CASE("canonical JSON round-trips") {
  const auto c = apply_overrides(default_config(), {"seed=17", "uncertainty.bin_edges=[55,65,75]", "gamma=30"});
  const auto text = config_to_json(c);
  const auto back = parse_config(text);
  CHECK(config_to_json(back) == text);
  CHECK(back.seed == 17);
  CHECK(back.gamma == 30);
  CHECK(back.uncertainty.bin_edges == std::vector<double>{55, 65, 75});
}

TEST_CASE("automatic DTW band") {
  const auto c = default_config();
  CHECK_FALSE(c.band_for(512).has_value());
  CHECK(c.band_for(1000).value() == 100);
  CHECK(c.band_for(4000).value() == 400);
}

TEST_CASE("sub-seed derivation") {
  CHECK(derive_seed(0, "run", 3) == derive_seed(0, "run", 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t m : {0u, 1u})
    for (const char* s : {"run", "dataset", "bootstrap"})
      for (std::uint64_t i = 0; i < 5; ++i) seen.insert(derive_seed(m, s, i));
  CHECK(seen.size() == 30);
}

TEST_CASE("regressor factory") {
  SyntheticSpec spec;
  spec.n_train = 12;
  spec.n_test = 1;
  spec.length = 300;
  const auto tt = make_synthetic_benchmark(spec, 1);
  for (const char* kind : {"ridge_descriptor", "knn_profile", "knn_dtw", "spectral_rate"}) {
    RegressorConfig rc;
    rc.kind = kind;
    const auto r = make_regressor(rc, tt.train, std::nullopt);
    CHECK(std::isfinite(r->predict(tt.test[0].series)));
  }
  RegressorConfig big;
  big.kind = "knn_profile";
  big.k = 100;
  CHECK_NOTHROW(make_regressor(big, tt.train, std::nullopt));
  RegressorConfig bad;
  bad.kind = "mystery";
  CHECK_THROWS(make_regressor(bad, tt.train, std::nullopt));
}

}
