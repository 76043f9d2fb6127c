#include "helpers.hpp"

#include "morphcf/config.hpp"
#include "morphcf/experiment.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

using namespace morphcf;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
  return apply_overrides(default_config(),
                         {"dataset.synthetic.n_train=24", "dataset.synthetic.n_test=4", "dataset.synthetic.length=300",
                          "nsga3.population=8", "nsga3.generations=2", "gamma=20", "seed=5"});
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("morphcf_unit_" + name);
  fs::remove_all(p);
  return p;
}

} // namespace

TEST_SUITE("experiment") {

TEST_CASE("number formatting round-trips") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(3.0) == "3");
  CHECK(format_optional(std::nullopt).empty());
  for (double v : {1.0 / 3.0, 1e-300, 123456.789, -2.5e-7}) CHECK(std::stod(format_number(v)) == v);
}

TEST_CASE("instance selection") {
  auto c = default_config();
  CHECK(select_instances(c, 4) == std::vector<std::size_t>{0, 1, 2, 3});
  c.instances.indices = {5, 2, 5};
  CHECK(select_instances(c, 10) == std::vector<std::size_t>{2, 5});
  c.instances.indices = {12};
  CHECK_THROWS(select_instances(c, 10));
  c.instances.indices.clear();
  c.instances.count = 3;
  const auto s = select_instances(c, 50);
  CHECK(s.size() == 3);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(select_instances(c, 50) == s);
  c.instances.count = 80;
  CHECK(select_instances(c, 50).size() == 50);
}

TEST_CASE("parallel_for collects failures per index") {
  std::atomic<int> ran{0};
  const auto failures = parallel_for(10, 3, [&](std::size_t i) {
    ++ran;
    if (i % 4 == 1) throw std::runtime_error("boom " + std::to_string(i));
  });
  CHECK(ran == 10);
  REQUIRE(failures.size() == 3);
  CHECK(failures[0].first == 1);
  CHECK(failures[0].second == "boom 1");
}

TEST_CASE("missing dataset files are named") {
  auto c = default_config();
  c.dataset.source = "ts";
  c.dataset.train_path = "/nonexistent/train_file.ts";
  c.dataset.test_path = "/nonexistent/test_file.ts";
  try {
    load_data(c);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("/nonexistent/train_file.ts") != std::string::npos);
  }
}

TEST_CASE("one instance end to end") {
  const auto cfg = tiny_config();
  auto data = load_data(cfg);
  auto reg = make_regressor(cfg.regressor, data.train, cfg.band_for(data.train.series_length()));
  const GenerationContext ctx(cfg, data, reg);
  const auto r = generate_instance(ctx, 1);
  CHECK(r.test_index == 1);
  CHECK(r.label == data.test[1].label);
  const TargetSpec t(r.label, cfg.delta);
  for (const auto& m : r.archive.members()) CHECK(t.contains(reg->predict(m.waveform)));
  CHECK(r.archive_report.diversity == r.archive.size());
  if (r.nun) {
    CHECK(t.contains(r.nun->item.label));
    CHECK(r.nun_report->diversity == 0);
  } else {
    CHECK_FALSE(r.nun_error.empty());
  }
  const auto again = generate_instance(ctx, 1);
  CHECK(again.archive.size() == r.archive.size());
  CHECK(again.seed == r.seed);
}

TEST_CASE("generate then evaluate writes the expected files") {
  auto cfg = tiny_config();
  cfg.instances.indices = {0, 2};
  cfg.output_dir = scratch("gen");
  std::ostringstream log;
  REQUIRE(cmd_generate(cfg, log) == 0);
  for (const char* f : {"config.json", "seeds.json", "reports.csv", "regressor.json"}) CHECK(fs::exists(cfg.output_dir / f));
  for (const char* d : {"instance_0000", "instance_0002"}) {
    CHECK(fs::exists(cfg.output_dir / d / "archive.ts"));
    CHECK(fs::exists(cfg.output_dir / d / "stats.csv"));
    CHECK(fs::exists(cfg.output_dir / d / "report.json"));
  }
  CHECK_FALSE(fs::exists(cfg.output_dir / "PARTIAL"));
  REQUIRE(cmd_evaluate(cfg.output_dir, log) == 0);
  std::ifstream summary(cfg.output_dir / "summary.csv");
  std::string header;
  std::getline(summary, header);
  CHECK(header == "metric,archive,nun,n_archive,n_nun");

  const auto empty = scratch("empty");
  fs::create_directories(empty);
  CHECK_THROWS(cmd_evaluate(empty, log));
  CHECK_THROWS(cmd_evaluate(scratch("missing"), log));
  fs::remove_all(cfg.output_dir);
  fs::remove_all(empty);
}

}
