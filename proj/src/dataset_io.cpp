#include "morphcf/dataset_io.hpp"

#include "morphcf/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string_view>

namespace morphcf {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view tok, std::size_t line_no) {
  tok = trim(tok);
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (tok.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError(line_no, "non-numeric token '" + std::string(tok) + "'");
  }
  return v;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

} // namespace

Dataset parse_ts_dataset(std::istream& in, const TsReadOptions& opts, const std::string& name) {
  Dataset d({}, name);
  std::string problem = name;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') {
      continue;
    }
    if (line.front() == '@') {
      const auto key = lowercase(line.substr(0, line.find_first_of(" \t")));
      if (key == "@problemname") {
        problem = std::string(trim(line.substr(key.size())));
      }
      continue;
    }
    const auto colon = line.rfind(':');
    if (colon == std::string_view::npos) {
      throw ParseError(line_no, "missing ':' before the target value");
    }
    const double label = parse_number(line.substr(colon + 1), line_no);

    // Dimensions are colon-separated in front of the target.
    std::string_view dims = line.substr(0, colon);
    std::string_view chosen;
    std::size_t dim = 0;
    while (true) {
      const auto next = dims.find(':');
      const auto part = dims.substr(0, next);
      if (dim == opts.channel) {
        chosen = part;
        break;
      }
      if (next == std::string_view::npos) {
        throw ParseError(line_no, "channel " + std::to_string(opts.channel) + " not present");
      }
      dims = dims.substr(next + 1);
      ++dim;
    }

    std::vector<double> values;
    std::size_t pos = 0;
    while (pos <= chosen.size()) {
      const auto comma = chosen.find(',', pos);
      const auto tok = chosen.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - pos);
      values.push_back(parse_number(tok, line_no));
      if (comma == std::string_view::npos) {
        break;
      }
      pos = comma + 1;
    }
    try {
      TimeSeries s(std::move(values), opts.sample_rate_hz);
      d.push_back(LabeledSeries(opts.zscore ? zscore(s) : std::move(s), label));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return Dataset(std::vector<LabeledSeries>(d.items()), problem);
}

Dataset parse_ts_dataset(const std::filesystem::path& path, const TsReadOptions& opts) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open dataset file '" + path.string() + "'");
  }
  return parse_ts_dataset(in, opts, path.stem().string());
}

void write_ts_dataset(std::ostream& out, const Dataset& d) {
  out << "@problemName " << (d.name().empty() ? "anonymous" : d.name()) << '\n'
      << "@timeStamps false\n@missing false\n@univariate true\n@equalLength true\n"
      << "@seriesLength " << d.series_length() << '\n'
      << "@targetlabel true\n@data\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& item : d.items()) {
    const auto v = item.series.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i != 0) out << ',';
      out << v[i];
    }
    out << ':' << item.label << '\n';
  }
}

void write_ts_dataset(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  write_ts_dataset(out, d);
}

TimeSeries zscore(const TimeSeries& x) {
  const auto v = x.values();
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double s : v) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : v) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(v.size(), 0.0);
  if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / sd;
  }
  return TimeSeries(std::move(out), x.sample_rate_hz());
}

LabeledSeries synth_ppg(double heart_rate_bpm, double duration_s, double sample_rate_hz,
                        double noise_std, std::uint64_t seed) {
  if (!(heart_rate_bpm >= 30.0 && heart_rate_bpm <= 220.0)) {
    throw std::invalid_argument("synth_ppg: heart rate must lie in [30, 220] bpm");
  }
  if (!(duration_s > 0.0) || !(sample_rate_hz > 0.0) || noise_std < 0.0) {
    throw std::invalid_argument("synth_ppg: duration and sample rate must be positive");
  }
  const auto T = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 1.0);
  const double phase0 = phase_dist(rng);

  const double beat_hz = heart_rate_bpm / 60.0;
  constexpr double kSystolicCenter = 0.2;
  constexpr double kDicroticOffset = 0.4;
  // Gaussian sigmas as fractions of a period. The broad systolic peak keeps the
  // fundamental clearly above the second harmonic.
  constexpr double kSystolicWidth = 0.2;
  constexpr double kDicroticWidth = 0.1;
  constexpr double kDicroticGain = 0.25;
  auto gauss = [](double u, double c, double w) {
    // periodic distance on the unit circle of beat phase
    double d = u - c;
    d -= std::round(d);
    return std::exp(-0.5 * (d / w) * (d / w));
  };

  std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
  std::vector<double> v(T);
  for (std::size_t t = 0; t < T; ++t) {
    double u = static_cast<double>(t) / sample_rate_hz * beat_hz + phase0;
    u -= std::floor(u);
    v[t] = gauss(u, kSystolicCenter, kSystolicWidth) +
           kDicroticGain * gauss(u, kSystolicCenter + kDicroticOffset, kDicroticWidth);
    if (noise_std > 0.0) {
      v[t] += noise(rng);
    }
  }
  return LabeledSeries(TimeSeries(std::move(v), sample_rate_hz), heart_rate_bpm);
}

Dataset train_test_split_bootstrap(const Dataset& d, std::uint64_t seed) {
  if (d.empty()) {
    throw std::invalid_argument("bootstrap resample of an empty dataset");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, d.size() - 1);
  std::vector<LabeledSeries> items;
  items.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    items.push_back(d[pick(rng)]);
  }
  return Dataset(std::move(items), d.name() + "-boot");
}

TrainTest make_synthetic_benchmark(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.n_train == 0 || spec.length < 2 || !(spec.label_max_bpm > spec.label_min_bpm)) {
    throw std::invalid_argument("synthetic benchmark: invalid spec");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> label_dist(spec.label_min_bpm, spec.label_max_bpm);
  std::normal_distribution<double> gain_dist(1.0, spec.amplitude_jitter);
  const double duration = static_cast<double>(spec.length) / spec.sample_rate_hz;

  auto draw = [&](bool training) {
    double y = label_dist(rng);
    if (training && spec.train_gap) {
      while (y >= spec.train_gap->first && y < spec.train_gap->second) {
        y = label_dist(rng);
      }
    }
    const double gain = std::max(0.2, gain_dist(rng));
    auto item = synth_ppg(y, duration, spec.sample_rate_hz, spec.noise_std, rng());
    std::vector<double> v = item.series.vector();
    for (double& s : v) s *= gain;
    return LabeledSeries(TimeSeries(std::move(v), spec.sample_rate_hz), y);
  };

  TrainTest out{Dataset({}, "synthetic-train"), Dataset({}, "synthetic-test")};
  for (std::size_t i = 0; i < spec.n_train; ++i) out.train.push_back(draw(true));
  for (std::size_t i = 0; i < spec.n_test; ++i) out.test.push_back(draw(false));
  return out;
}

} // namespace morphcf
