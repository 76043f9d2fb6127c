#include "helpers.hpp"

#include "morphcf/dataset_io.hpp"
#include "morphcf/descriptors.hpp"
#include "morphcf/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

using namespace morphcf;
using testutil::ts;

namespace {

Dataset parse(const std::string& text, TsReadOptions opts = {}) {
  std::istringstream in(text);
  return parse_ts_dataset(in, opts, "test");
}

double correlation(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

} // namespace

TEST_SUITE("dataset_io") {

TEST_CASE("time series invariants") {
  CHECK_THROWS_AS(ts({1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ts({1.0, NAN}), std::invalid_argument);
  CHECK_THROWS_AS(ts({1.0, 2.0}, 0.0), std::invalid_argument);
  CHECK(ts({1.0, 2.0}, 250.0).dt() == 0.004);
  CHECK_THROWS_AS(LabeledSeries(ts({1.0, 2.0}), INFINITY), std::invalid_argument);
  Dataset d;
  d.push_back(LabeledSeries(ts({1, 2, 3}), 1));
  CHECK_THROWS_AS(d.push_back(LabeledSeries(ts({1, 2}), 1)), StructuralError);
  CHECK_THROWS_AS(d.push_back(LabeledSeries(ts({1, 2, 3}, 100.0), 1)), StructuralError);
}

TEST_CASE("parse data and header lines") {
  const auto d = parse("@problemName BIDMC32HR\n@timeStamps false\n@data\n1.2,3.4,5.6:80\n");
  REQUIRE(d.size() == 1);
  CHECK(d[0].series.vector() == std::vector<double>{1.2, 3.4, 5.6});
  CHECK(d[0].label == 80.0);
  CHECK(d[0].series.sample_rate_hz() == 125.0);
  CHECK(parse("@problemName BIDMC32HR\n").empty());
}

TEST_CASE("parse errors name the line") {
  try {
    parse("@data\n1,2,3:70\n1.0,oops:80\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse("1,2,3\n"), ParseError);
  CHECK_THROWS_AS(parse("1,2,3:abc\n"), ParseError);
  CHECK_THROWS_AS(parse("1,2,3:70\n1,2:71\n"), StructuralError);
}

TEST_CASE("multichannel lines keep the configured channel") {
  TsReadOptions opts;
  opts.channel = 1;
  const auto d = parse("1,2,3:4,5,6:99\n", opts);
  CHECK(d[0].series.vector() == std::vector<double>{4, 5, 6});
  CHECK(d[0].label == 99.0);
  opts.channel = 2;
  CHECK_THROWS_AS(parse("1,2,3:4,5,6:99\n", opts), ParseError);
}

TEST_CASE("write then parse round-trips") {
  std::mt19937_64 rng(7);
  Dataset d({}, "rt");
  for (int i = 0; i < 10; ++i) d.push_back(LabeledSeries(ts(testutil::random_values(rng, 33)), 60.0 + i * 1.37));
  std::stringstream buf;
  write_ts_dataset(buf, d);
  const auto back = parse_ts_dataset(buf, {}, "rt");
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(std::fabs(back[i].label - d[i].label) <= 1e-9);
    for (std::size_t t = 0; t < d[i].series.size(); ++t)
      CHECK(std::fabs(back[i].series[t] - d[i].series[t]) <= 1e-9);
  }
}

TEST_CASE("zscore") {
  const auto z = zscore(ts({1, 2, 3, 4, 5}));
  double m = 0, s = 0;
  for (double v : z.values()) m += v;
  for (double v : z.values()) s += v * v;
  CHECK(std::fabs(m) < 1e-12);
  CHECK(s / 5 == doctest::Approx(1.0));
  for (double c : {2.0, 0.1, 3.7}) {
    const auto flat = zscore(ts(testutil::constant(7, c)));
    for (double v : flat.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("synthetic PPG contract") {
  const auto a = synth_ppg(75, 32, 125, 0, 1);
  CHECK(a.label == 75.0);
  CHECK(a.series.size() == 4000);
  CHECK(std::fabs(dominant_frequency(a.series) - 1.25) <= 125.0 / 4000.0);
  const auto b1 = synth_ppg(60, 32, 125, 0, 1);
  const auto b2 = synth_ppg(60, 32, 125, 0, 1);
  CHECK(b1.series == b2.series);
  CHECK_FALSE(synth_ppg(60, 32, 125, 0.05, 1).series == synth_ppg(60, 32, 125, 0.05, 2).series);
  CHECK_THROWS_AS(synth_ppg(20, 32, 125, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(synth_ppg(230, 32, 125, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(synth_ppg(60, 0, 125, 0, 1), std::invalid_argument);
}

TEST_CASE("noiseless synthetic PPG is periodic beat to beat") {
  for (double bpm : {60.0, 75.0}) {
    const auto s = synth_ppg(bpm, 32, 125, 0, 3);
    const auto v = s.series.values();
    const auto period = static_cast<std::size_t>(std::lround(125.0 * 60.0 / bpm));
    std::vector<double> per_beat;
    for (std::size_t start = 0; start + period + 1 <= v.size(); start += period)
      per_beat.push_back(gradient_q95(v.subspan(start, period + 1), 125.0, true));
    REQUIRE(per_beat.size() >= 10);
    for (double g : per_beat) {
      CHECK(std::isfinite(g));
      CHECK(std::fabs(g - per_beat.front()) <= 1e-9);
    }
    CHECK(correlation(v.subspan(0, v.size() - period), v.subspan(period)) >= 0.999);
  }
}

TEST_CASE("bootstrap resample") {
  Dataset one({LabeledSeries(ts({1, 2, 3}), 70)});
  const auto r1 = train_test_split_bootstrap(one, 5);
  REQUIRE(r1.size() == 1);
  CHECK(r1[0].series == one[0].series);

  Dataset d;
  for (int i = 0; i < 25; ++i) d.push_back(LabeledSeries(ts({double(i), 0.0}), i));
  const auto a = train_test_split_bootstrap(d, 42);
  const auto b = train_test_split_bootstrap(d, 42);
  CHECK(a.size() == 25);
  CHECK(a.labels() == b.labels());
  CHECK_FALSE(a.labels() == train_test_split_bootstrap(d, 43).labels());
  CHECK_THROWS_AS(train_test_split_bootstrap(Dataset{}, 1), std::invalid_argument);
}

TEST_CASE("synthetic benchmark") {
  SyntheticSpec spec;
  spec.n_train = 40;
  spec.n_test = 30;
  spec.length = 500;
  spec.train_gap = std::make_pair(100.0, 110.0);
  const auto tt = make_synthetic_benchmark(spec, 9);
  CHECK(tt.train.size() == 40);
  CHECK(tt.test.size() == 30);
  CHECK(tt.train.series_length() == 500);
  for (double y : tt.train.labels()) {
    CHECK(y >= 60.0);
    CHECK(y <= 120.0);
    CHECK_FALSE((y >= 100.0 && y < 110.0));
  }
  for (double y : tt.test.labels()) {
    CHECK(y >= 60.0);
    CHECK(y <= 120.0);
  }
  const auto again = make_synthetic_benchmark(spec, 9);
  CHECK(again.train.labels() == tt.train.labels());
  CHECK(again.test[0].series == tt.test[0].series);
}

}
