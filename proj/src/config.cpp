#include "morphcf/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace morphcf {

using nlohmann::json;

namespace {

constexpr std::string_view kDefaultConfig = R"json(// morphcf experiment configuration (JSON with comments).
// Any subset of keys may be given; missing keys take the values below.
{
  // Master seed. Every stochastic stage derives its own seed from it
  // (see seeds.json in the output directory).
  "seed": 0,
  "output_dir": "morphcf_out",
  // Test instances processed in parallel.
  "workers": 1,

  "dataset": {
    // "synthetic" generates PPG-like pulse trains; "ts" reads .ts regression files.
    "source": "synthetic",
    "train_path": "",
    "test_path": "",
    // .ts files carry no sampling rate.
    "sample_rate_hz": 125.0,
    "channel": 0,
    "zscore": false,
    "synthetic": {
      "n_train": 200,
      "n_test": 20,
      "length": 1000,
      "sample_rate_hz": 125.0,
      "label_min_bpm": 60.0,
      "label_max_bpm": 120.0,
      "noise_std": 0.003,
      "amplitude_jitter": 0.1,
      // [lo, hi) band of labels withheld from the training split, or null.
      "train_gap": null
    }
  },

  // Which test instances to explain. "indices" wins when non-empty; otherwise
  // "count" instances are sampled with the master seed; null count means all.
  "instances": { "indices": [], "count": null },

  // Black-box model. kinds: ridge_descriptor, knn_profile, knn_dtw, spectral_rate
  "regressor": { "kind": "ridge_descriptor", "ridge_lambda": 0.001, "k": 5, "scale": 60.0 },

  // Morphology loss: one term per descriptor.
  "morph": {
    "epsilon": 1e-8,
    // Added to O_morph per unit of out-of-interval error for infeasible candidates.
    "infeasibility_penalty": 10.0,
    "terms": [
      { "descriptor": "amplitude",          "mode": "preserve", "weight": 1.0, "tau": 0.0 },
      { "descriptor": "dominant_frequency", "mode": "preserve", "weight": 1.0, "tau": 0.0 },
      { "descriptor": "plateau",            "mode": "preserve", "weight": 1.0, "tau": 0.0 },
      { "descriptor": "trend",              "mode": "preserve", "weight": 0.5, "tau": 0.0 },
      { "descriptor": "max_gradient",       "mode": "preserve", "weight": 0.5, "tau": 0.0 }
    ]
  },

  // Half-width of the target interval around the ground-truth label.
  "delta": 5.0,

  "nsga3": {
    "population": 100,
    "generations": 50,
    "p_crossover": 0.6,
    "p_mutation": 0.5,
    "reference_divisions": 12
  },

  // Cosine blending weights alpha_u = beta * (1 + cos(eta*pi + nu*pi*u/(n-1))).
  "blend": { "beta": 1.0, "eta": 0.5, "nu": 0.5 },

  // Initial edit windows are drawn from [gamma, floor(T/2)].
  "gamma": 50,

  // Reference-set denoising; window_len 0 means min(250, floor(T/4)).
  // center: remove the mean before the decomposition and restore it afterwards.
  "ssa": { "window_len": 0, "n_components": 2, "center": true },

  // Sakoe-Chiba half-width: "auto" (none up to T=512, else ceil(0.1*T)), null, or an integer.
  "dtw_band": "auto",

  "metrics": { "knn_k": 5, "atol": 1e-9, "freq_bins": 50, "freq_eps": 1e-10 },

  "uncertainty": {
    "n_boot": 20,
    "bin_edges": [60, 70, 80, 90, 100, 110, 120],
    // <= 0 selects Scott's rule n^(-1/(d+4)) on standardized profiles.
    "bandwidth": 0.0,
    "level": 0.95,
    // Base model for the bootstrap ensemble and for the counterfactual search.
    "regressor": { "kind": "knn_profile", "ridge_lambda": 0.001, "k": 5, "scale": 60.0 }
  }
}
)json";

json parse_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

void deep_merge(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) {
    throw std::invalid_argument("config: '" + (prefix.empty() ? std::string("<root>") : prefix) +
                                "' must be an object");
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    auto& slot = base[it.key()];
    if (slot.is_object() && it.value().is_object()) {
      deep_merge(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: bad value for '" + where + "." + key + "': " + e.what());
  }
}

RegressorConfig regressor_from(const json& j, const std::string& where) {
  RegressorConfig r;
  r.kind = get<std::string>(j, "kind", where);
  r.ridge_lambda = get<double>(j, "ridge_lambda", where);
  r.k = get<std::size_t>(j, "k", where);
  r.scale = get<double>(j, "scale", where);
  return r;
}

json regressor_to(const RegressorConfig& r) {
  return {{"kind", r.kind}, {"ridge_lambda", r.ridge_lambda}, {"k", r.k}, {"scale", r.scale}};
}

MorphMode mode_from(const std::string& s) {
  if (s == "preserve") return MorphMode::Preserve;
  if (s == "change") return MorphMode::Change;
  throw std::invalid_argument("config: morph mode must be 'preserve' or 'change', got '" + s + "'");
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  c.seed = get<std::uint64_t>(j, "seed", "");
  c.output_dir = get<std::string>(j, "output_dir", "");
  c.workers = get<std::size_t>(j, "workers", "");

  const auto& d = j.at("dataset");
  c.dataset.source = get<std::string>(d, "source", "dataset");
  c.dataset.train_path = get<std::string>(d, "train_path", "dataset");
  c.dataset.test_path = get<std::string>(d, "test_path", "dataset");
  c.dataset.read.sample_rate_hz = get<double>(d, "sample_rate_hz", "dataset");
  c.dataset.read.channel = get<std::size_t>(d, "channel", "dataset");
  c.dataset.read.zscore = get<bool>(d, "zscore", "dataset");
  const auto& s = d.at("synthetic");
  auto& sy = c.dataset.synthetic;
  sy.n_train = get<std::size_t>(s, "n_train", "dataset.synthetic");
  sy.n_test = get<std::size_t>(s, "n_test", "dataset.synthetic");
  sy.length = get<std::size_t>(s, "length", "dataset.synthetic");
  sy.sample_rate_hz = get<double>(s, "sample_rate_hz", "dataset.synthetic");
  sy.label_min_bpm = get<double>(s, "label_min_bpm", "dataset.synthetic");
  sy.label_max_bpm = get<double>(s, "label_max_bpm", "dataset.synthetic");
  sy.noise_std = get<double>(s, "noise_std", "dataset.synthetic");
  sy.amplitude_jitter = get<double>(s, "amplitude_jitter", "dataset.synthetic");
  if (!s.at("train_gap").is_null()) {
    const auto gap = get<std::vector<double>>(s, "train_gap", "dataset.synthetic");
    if (gap.size() != 2) {
      throw std::invalid_argument("config: dataset.synthetic.train_gap must be [lo, hi] or null");
    }
    sy.train_gap = std::make_pair(gap[0], gap[1]);
  }

  const auto& in = j.at("instances");
  c.instances.indices = get<std::vector<std::size_t>>(in, "indices", "instances");
  if (!in.at("count").is_null()) c.instances.count = get<std::size_t>(in, "count", "instances");

  c.regressor = regressor_from(j.at("regressor"), "regressor");

  const auto& m = j.at("morph");
  c.morph.epsilon = get<double>(m, "epsilon", "morph");
  c.morph.infeasibility_penalty = get<double>(m, "infeasibility_penalty", "morph");
  const auto& terms = m.at("terms");
  if (!terms.is_array() || terms.size() != PropertyProfile::kSize) {
    throw std::invalid_argument("config: morph.terms must list all 5 descriptors");
  }
  std::array<bool, PropertyProfile::kSize> seen{};
  for (const auto& t : terms) {
    const auto name = get<std::string>(t, "descriptor", "morph.terms");
    std::size_t idx = PropertyProfile::kSize;
    for (std::size_t q = 0; q < PropertyProfile::kSize; ++q) {
      if (descriptor_name(q) == name) idx = q;
    }
    if (idx == PropertyProfile::kSize || seen[idx]) {
      throw std::invalid_argument("config: unknown or repeated descriptor '" + name + "'");
    }
    seen[idx] = true;
    c.morph.terms[idx] = MorphTerm{mode_from(get<std::string>(t, "mode", "morph.terms")),
                                   get<double>(t, "weight", "morph.terms"),
                                   get<double>(t, "tau", "morph.terms")};
  }

  c.delta = get<double>(j, "delta", "");

  const auto& n = j.at("nsga3");
  c.run.population = get<std::size_t>(n, "population", "nsga3");
  c.run.generations = get<std::size_t>(n, "generations", "nsga3");
  c.run.p_crossover = get<double>(n, "p_crossover", "nsga3");
  c.run.p_mutation = get<double>(n, "p_mutation", "nsga3");
  c.run.reference_divisions = get<std::size_t>(n, "reference_divisions", "nsga3");

  const auto& b = j.at("blend");
  c.blend = BlendParams{get<double>(b, "beta", "blend"), get<double>(b, "eta", "blend"),
                        get<double>(b, "nu", "blend")};
  c.gamma = get<std::size_t>(j, "gamma", "");
  c.ssa.window_len = get<std::size_t>(j.at("ssa"), "window_len", "ssa");
  c.ssa.n_components = get<std::size_t>(j.at("ssa"), "n_components", "ssa");
  c.ssa.center = get<bool>(j.at("ssa"), "center", "ssa");

  const auto& band = j.at("dtw_band");
  if (band.is_string() && band.get<std::string>() == "auto") {
    c.dtw_band_auto = true;
  } else if (band.is_null()) {
    c.dtw_band_auto = false;
  } else if (band.is_number_unsigned()) {
    c.dtw_band_auto = false;
    c.dtw_band = band.get<std::size_t>();
  } else {
    throw std::invalid_argument("config: dtw_band must be \"auto\", null or a non-negative integer");
  }

  const auto& mt = j.at("metrics");
  c.metrics.knn_k = get<std::size_t>(mt, "knn_k", "metrics");
  c.metrics.atol = get<double>(mt, "atol", "metrics");
  c.metrics.freq_bins = get<std::size_t>(mt, "freq_bins", "metrics");
  c.metrics.freq_eps = get<double>(mt, "freq_eps", "metrics");

  const auto& u = j.at("uncertainty");
  c.uncertainty.n_boot = get<std::size_t>(u, "n_boot", "uncertainty");
  c.uncertainty.bin_edges = get<std::vector<double>>(u, "bin_edges", "uncertainty");
  c.uncertainty.bandwidth = get<double>(u, "bandwidth", "uncertainty");
  c.uncertainty.level = get<double>(u, "level", "uncertainty");
  c.uncertainty.regressor = regressor_from(u.at("regressor"), "uncertainty.regressor");

  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  j["workers"] = c.workers;
  const auto& sy = c.dataset.synthetic;
  j["dataset"] = {
      {"source", c.dataset.source},
      {"train_path", c.dataset.train_path.string()},
      {"test_path", c.dataset.test_path.string()},
      {"sample_rate_hz", c.dataset.read.sample_rate_hz},
      {"channel", c.dataset.read.channel},
      {"zscore", c.dataset.read.zscore},
      {"synthetic",
       {{"n_train", sy.n_train},
        {"n_test", sy.n_test},
        {"length", sy.length},
        {"sample_rate_hz", sy.sample_rate_hz},
        {"label_min_bpm", sy.label_min_bpm},
        {"label_max_bpm", sy.label_max_bpm},
        {"noise_std", sy.noise_std},
        {"amplitude_jitter", sy.amplitude_jitter},
        {"train_gap", sy.train_gap ? json::array({sy.train_gap->first, sy.train_gap->second})
                                   : json(nullptr)}}}};
  j["instances"] = {{"indices", c.instances.indices},
                    {"count", c.instances.count ? json(*c.instances.count) : json(nullptr)}};
  j["regressor"] = regressor_to(c.regressor);
  json terms = json::array();
  for (std::size_t q = 0; q < PropertyProfile::kSize; ++q) {
    const auto& t = c.morph.terms[q];
    terms.push_back({{"descriptor", std::string(descriptor_name(q))},
                     {"mode", t.mode == MorphMode::Preserve ? "preserve" : "change"},
                     {"weight", t.weight},
                     {"tau", t.tau}});
  }
  j["morph"] = {{"epsilon", c.morph.epsilon},
                {"infeasibility_penalty", c.morph.infeasibility_penalty},
                {"terms", terms}};
  j["delta"] = c.delta;
  j["nsga3"] = {{"population", c.run.population},
                {"generations", c.run.generations},
                {"p_crossover", c.run.p_crossover},
                {"p_mutation", c.run.p_mutation},
                {"reference_divisions", c.run.reference_divisions}};
  j["blend"] = {{"beta", c.blend.beta}, {"eta", c.blend.eta}, {"nu", c.blend.nu}};
  j["gamma"] = c.gamma;
  j["ssa"] = {{"window_len", c.ssa.window_len},
              {"n_components", c.ssa.n_components},
              {"center", c.ssa.center}};
  if (c.dtw_band_auto) {
    j["dtw_band"] = "auto";
  } else {
    j["dtw_band"] = c.dtw_band ? json(*c.dtw_band) : json(nullptr);
  }
  j["metrics"] = {{"knn_k", c.metrics.knn_k},
                  {"atol", c.metrics.atol},
                  {"freq_bins", c.metrics.freq_bins},
                  {"freq_eps", c.metrics.freq_eps}};
  j["uncertainty"] = {{"n_boot", c.uncertainty.n_boot},
                      {"bin_edges", c.uncertainty.bin_edges},
                      {"bandwidth", c.uncertainty.bandwidth},
                      {"level", c.uncertainty.level},
                      {"regressor", regressor_to(c.uncertainty.regressor)}};
  return j;
}

void validate_regressor(const RegressorConfig& r, const std::string& where) {
  if (r.kind != "ridge_descriptor" && r.kind != "knn_profile" && r.kind != "knn_dtw" &&
      r.kind != "spectral_rate") {
    throw std::invalid_argument("config: unknown " + where + ".kind '" + r.kind + "'");
  }
  if (r.k == 0) throw std::invalid_argument("config: " + where + ".k must be positive");
}

} // namespace

DtwBand ExperimentConfig::band_for(std::size_t T) const {
  return dtw_band_auto ? default_dtw_band(T) : dtw_band;
}

void ExperimentConfig::validate() const {
  if (dataset.source != "synthetic" && dataset.source != "ts") {
    throw std::invalid_argument("config: dataset.source must be 'synthetic' or 'ts'");
  }
  if (dataset.source == "ts" && (dataset.train_path.empty() || dataset.test_path.empty())) {
    throw std::invalid_argument("config: dataset.train_path and dataset.test_path are required for source 'ts'");
  }
  validate_regressor(regressor, "regressor");
  validate_regressor(uncertainty.regressor, "uncertainty.regressor");
  morph.validate();
  if (!(delta > 0.0)) throw std::invalid_argument("config: delta must be positive");
  run.validate();
  if (gamma < 1) throw std::invalid_argument("config: gamma must be at least 1");
  if (workers < 1) throw std::invalid_argument("config: workers must be at least 1");
  if (metrics.knn_k < 1) throw std::invalid_argument("config: metrics.knn_k must be positive");
  if (metrics.freq_bins < 2) throw std::invalid_argument("config: metrics.freq_bins must be >= 2");
  if (uncertainty.n_boot < 2) throw std::invalid_argument("config: uncertainty.n_boot must be >= 2");
  if (uncertainty.bin_edges.size() < 2) {
    throw std::invalid_argument("config: uncertainty.bin_edges needs at least two edges");
  }
  for (std::size_t i = 1; i < uncertainty.bin_edges.size(); ++i) {
    if (!(uncertainty.bin_edges[i] > uncertainty.bin_edges[i - 1])) {
      throw std::invalid_argument("config: uncertainty.bin_edges must be strictly increasing");
    }
  }
  if (!(uncertainty.level > 0.0 && uncertainty.level < 1.0)) {
    throw std::invalid_argument("config: uncertainty.level must lie in (0, 1)");
  }
}

std::string_view default_config_text() { return kDefaultConfig; }

ExperimentConfig default_config() { return from_json(parse_text(kDefaultConfig)); }

ExperimentConfig parse_config(std::string_view text) {
  json base = parse_text(kDefaultConfig);
  deep_merge(base, parse_text(text), "");
  return from_json(base);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ExperimentConfig apply_overrides(const ExperimentConfig& base,
                                 const std::vector<std::string>& assignments) {
  json doc = to_json(base);
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("override must look like key.path=value: '" + a + "'");
    }
    const std::string key = a.substr(0, eq);
    const std::string raw = a.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;
    }
    json patch = value;
    std::size_t end = key.size();
    while (true) {
      const auto dot = key.rfind('.', end - 1);
      const std::string part =
          key.substr(dot == std::string::npos ? 0 : dot + 1,
                     end - (dot == std::string::npos ? 0 : dot + 1));
      patch = json{{part, patch}};
      if (dot == std::string::npos) break;
      end = dot;
    }
    deep_merge(doc, patch, "");
  }
  return from_json(doc);
}

std::string config_to_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2); }

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index) {
  // FNV-1a over the stream name, then splitmix64 finalization.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : stream) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = master ^ h ^ (index * 0x9E3779B97F4A7C15ULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RegressorPtr make_regressor(const RegressorConfig& rc, const Dataset& train, DtwBand band) {
  if (rc.kind == "ridge_descriptor") return ridge_descriptor_regressor(train, rc.ridge_lambda);
  if (rc.kind == "knn_profile") return knn_profile_regressor(train, std::min(rc.k, train.size()));
  if (rc.kind == "knn_dtw") return knn_dtw_regressor(train, std::min(rc.k, train.size()), band);
  if (rc.kind == "spectral_rate") return spectral_rate_regressor(rc.scale);
  throw std::invalid_argument("unknown regressor kind '" + rc.kind + "'");
}

} // namespace morphcf
