#include "morphcf/nsga3.hpp"

#include "morphcf/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstring>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace morphcf {

void RunConfig::validate() const {
  if (population < 4 || population % 2 != 0) {
    throw std::invalid_argument("RunConfig: population must be even and at least 4");
  }
  if (generations < 1) {
    throw std::invalid_argument("RunConfig: generations must be at least 1");
  }
  if (!(p_crossover >= 0.0 && p_crossover <= 1.0) || !(p_mutation >= 0.0 && p_mutation <= 1.0)) {
    throw std::invalid_argument("RunConfig: variation probabilities must lie in [0, 1]");
  }
  if (reference_divisions < 1) {
    throw std::invalid_argument("RunConfig: reference divisions must be at least 1");
  }
}

ObjectivePoint to_point(const ObjectiveVector& o) {
  return ObjectivePoint{{o.morph, o.maxgrad, o.out}, o.feasible};
}

bool constrained_dominates(const ObjectivePoint& a, const ObjectivePoint& b) {
  if (a.feasible != b.feasible) {
    return a.feasible;
  }
  bool strictly = false;
  for (std::size_t j = 0; j < a.values.size(); ++j) {
    if (a.values[j] > b.values[j]) {
      return false;
    }
    strictly = strictly || a.values[j] < b.values[j];
  }
  return strictly;
}

Fronts non_dominated_sort(std::span<const ObjectivePoint> points) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> dom_count(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (constrained_dominates(points[i], points[j])) {
        dominated[i].push_back(j);
        ++dom_count[j];
      } else if (constrained_dominates(points[j], points[i])) {
        dominated[j].push_back(i);
        ++dom_count[i];
      }
    }
  }
  Fronts fronts;
  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < n; ++i) {
    if (dom_count[i] == 0) current.push_back(i);
  }
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t i : current) {
      for (std::size_t j : dominated[i]) {
        if (--dom_count[j] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

Fronts non_dominated_sort(std::span<const ObjectiveVector> objs) {
  std::vector<ObjectivePoint> pts;
  pts.reserve(objs.size());
  for (const auto& o : objs) pts.push_back(to_point(o));
  return non_dominated_sort(pts);
}

std::vector<std::vector<double>> reference_points(std::size_t n_obj, std::size_t divisions) {
  if (n_obj < 2 || divisions < 1) {
    throw std::invalid_argument("reference_points: need n_obj >= 2 and divisions >= 1");
  }
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> counts(n_obj, 0);
  const double p = static_cast<double>(divisions);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t dim, std::size_t left) {
    if (dim + 1 == n_obj) {
      counts[dim] = left;
      std::vector<double> pt(n_obj);
      for (std::size_t k = 0; k < n_obj; ++k) pt[k] = static_cast<double>(counts[k]) / p;
      out.push_back(std::move(pt));
      return;
    }
    for (std::size_t i = 0; i <= left; ++i) {
      counts[dim] = left - i;
      rec(dim + 1, i);
    }
  };
  rec(0, divisions);
  return out;
}

namespace {

// Normalizes the admitted set: translate by the ideal point, then scale by the
// hyperplane intercepts through the extreme points. Degenerate intercepts fall
// back to the per-axis maximum of the translated objectives.
std::vector<std::vector<double>> normalize_for_niching(std::span<const ObjectivePoint> points,
                                                       const std::vector<std::size_t>& members) {
  const std::size_t m = points[members.front()].values.size();
  std::vector<double> ideal(m, std::numeric_limits<double>::infinity());
  for (std::size_t i : members) {
    for (std::size_t j = 0; j < m; ++j) ideal[j] = std::min(ideal[j], points[i].values[j]);
  }
  std::vector<std::vector<double>> translated;
  translated.reserve(members.size());
  for (std::size_t i : members) {
    std::vector<double> t(m);
    for (std::size_t j = 0; j < m; ++j) t[j] = points[i].values[j] - ideal[j];
    translated.push_back(std::move(t));
  }

  Eigen::MatrixXd extremes(m, m);
  for (std::size_t axis = 0; axis < m; ++axis) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t s = 0; s < translated.size(); ++s) {
      double asf = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double w = j == axis ? 1.0 : 1e-6;
        asf = std::max(asf, translated[s][j] / w);
      }
      if (asf < best) {
        best = asf;
        best_idx = s;
      }
    }
    for (std::size_t j = 0; j < m; ++j) extremes(axis, j) = translated[best_idx][j];
  }

  std::vector<double> maxima(m, 0.0);
  for (const auto& t : translated) {
    for (std::size_t j = 0; j < m; ++j) maxima[j] = std::max(maxima[j], t[j]);
  }
  std::vector<double> intercepts(m);
  bool degenerate = true;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(extremes);
  if (lu.isInvertible()) {
    const Eigen::VectorXd b = lu.solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m)));
    degenerate = false;
    for (std::size_t j = 0; j < m; ++j) {
      const double a = 1.0 / b(static_cast<Eigen::Index>(j));
      if (!std::isfinite(a) || a <= 1e-10) {
        degenerate = true;
        break;
      }
      intercepts[j] = a;
    }
  }
  if (degenerate) {
    intercepts = maxima;
  }
  for (double& a : intercepts) {
    if (!(a > 1e-10)) a = 1.0;
  }
  for (auto& t : translated) {
    for (std::size_t j = 0; j < m; ++j) t[j] /= intercepts[j];
  }
  return translated;
}

struct Association {
  std::size_t ref;
  double distance;
};

Association associate(std::span<const double> f, const std::vector<std::vector<double>>& refs) {
  Association best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t r = 0; r < refs.size(); ++r) {
    const auto& w = refs[r];
    double dot = 0.0;
    double norm2 = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      dot += f[j] * w[j];
      norm2 += w[j] * w[j];
    }
    const double scale = dot / norm2;
    double d2 = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      const double diff = f[j] - scale * w[j];
      d2 += diff * diff;
    }
    const double d = std::sqrt(d2);
    if (d < best.distance) {
      best = {r, d};
    }
  }
  return best;
}

} // namespace

std::vector<std::size_t> select_indices(std::span<const ObjectivePoint> points, std::size_t P,
                                        const std::vector<std::vector<double>>& refpoints,
                                        std::uint64_t seed, std::vector<std::size_t>* ranks) {
  if (points.size() < P) {
    throw std::invalid_argument("select_indices: fewer candidates than survivors");
  }
  const Fronts fronts = non_dominated_sort(points);
  std::vector<std::size_t> front_of(points.size(), 0);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    for (std::size_t i : fronts[f]) front_of[i] = f + 1;
  }
  auto finish = [&](std::vector<std::size_t> chosen) {
    if (ranks != nullptr) {
      ranks->clear();
      for (std::size_t i : chosen) ranks->push_back(front_of[i]);
    }
    return chosen;
  };

  std::vector<std::size_t> chosen;
  chosen.reserve(P);
  const std::vector<std::size_t>* split = nullptr;
  for (const auto& f : fronts) {
    if (chosen.size() + f.size() <= P) {
      chosen.insert(chosen.end(), f.begin(), f.end());
      if (chosen.size() == P) return finish(std::move(chosen));
    } else {
      split = &f;
      break;
    }
  }
  if (split == nullptr) {
    return finish(std::move(chosen));
  }

  std::vector<std::size_t> admitted = chosen;
  admitted.insert(admitted.end(), split->begin(), split->end());
  const auto normalized = normalize_for_niching(points, admitted);

  std::vector<std::size_t> niche_count(refpoints.size(), 0);
  std::vector<Association> split_assoc;
  split_assoc.reserve(split->size());
  for (std::size_t k = 0; k < admitted.size(); ++k) {
    const Association a = associate(normalized[k], refpoints);
    if (k < chosen.size()) {
      ++niche_count[a.ref];
    } else {
      split_assoc.push_back(a);
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<bool> taken(split->size(), false);
  std::vector<bool> active(refpoints.size(), true);
  std::size_t remaining = P - chosen.size();
  while (remaining > 0) {
    std::size_t min_count = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> least;
    for (std::size_t r = 0; r < refpoints.size(); ++r) {
      if (!active[r]) continue;
      if (niche_count[r] < min_count) {
        min_count = niche_count[r];
        least.clear();
      }
      if (niche_count[r] == min_count) least.push_back(r);
    }
    const std::size_t r =
        least[std::uniform_int_distribution<std::size_t>(0, least.size() - 1)(rng)];
    std::vector<std::size_t> members;
    for (std::size_t k = 0; k < split->size(); ++k) {
      if (!taken[k] && split_assoc[k].ref == r) members.push_back(k);
    }
    if (members.empty()) {
      active[r] = false;
      continue;
    }
    std::size_t pick = members.front();
    if (niche_count[r] == 0) {
      for (std::size_t k : members) {
        if (split_assoc[k].distance < split_assoc[pick].distance) pick = k;
      }
    } else {
      pick = members[std::uniform_int_distribution<std::size_t>(0, members.size() - 1)(rng)];
    }
    taken[pick] = true;
    chosen.push_back((*split)[pick]);
    ++niche_count[r];
    --remaining;
  }
  return finish(std::move(chosen));
}

std::vector<Candidate> environmental_select(std::vector<Candidate> pool, std::size_t P,
                                            const std::vector<std::vector<double>>& refpoints,
                                            std::uint64_t seed) {
  std::vector<ObjectivePoint> pts;
  pts.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!pool[i].objective) {
      throw std::invalid_argument("environmental_select: candidate " + std::to_string(i) +
                                  " is not evaluated");
    }
    pts.push_back(to_point(*pool[i].objective));
  }
  std::vector<std::size_t> ranks;
  const auto idx = select_indices(pts, P, refpoints, seed, &ranks);
  std::vector<Candidate> out;
  out.reserve(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.push_back(std::move(pool[idx[k]]));
    out.back().rank = ranks[k];
  }
  return out;
}

std::vector<Candidate> tournament_select(const std::vector<Candidate>& pop, std::size_t count,
                                         std::uint64_t seed) {
  std::vector<Candidate> out;
  if (count == 0) return out;
  if (pop.empty()) {
    throw std::invalid_argument("tournament_select: empty population");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  std::bernoulli_distribution coin(0.5);
  constexpr auto unranked = std::numeric_limits<std::size_t>::max();
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t i = pick(rng);
    const std::size_t j = pick(rng);
    const std::size_t ri = pop[i].rank.value_or(unranked);
    const std::size_t rj = pop[j].rank.value_or(unranked);
    std::size_t winner = i;
    if (rj < ri) {
      winner = j;
    } else if (ri == rj && coin(rng)) {
      winner = j;
    }
    out.push_back(pop[winner]);
  }
  return out;
}

namespace {

double hv_recursive(std::vector<std::vector<double>> pts, const std::vector<double>& ref,
                    std::size_t dims) {
  if (pts.empty()) return 0.0;
  if (dims == 1) {
    double best = ref[0];
    for (const auto& p : pts) best = std::min(best, p[0]);
    return ref[0] - best;
  }
  const std::size_t last = dims - 1;
  std::sort(pts.begin(), pts.end(),
            [last](const auto& a, const auto& b) { return a[last] < b[last]; });
  double volume = 0.0;
  std::vector<std::vector<double>> slab;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    slab.push_back(pts[i]);
    const double top = i + 1 < pts.size() ? pts[i + 1][last] : ref[last];
    const double height = top - pts[i][last];
    if (height > 0.0) {
      volume += height * hv_recursive(slab, ref, last);
    }
  }
  return volume;
}

} // namespace

double hypervolume(const std::vector<std::vector<double>>& front, const std::vector<double>& ref) {
  for (const auto& p : front) {
    if (p.size() != ref.size()) {
      throw std::invalid_argument("hypervolume: dimension mismatch");
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (p[j] > ref[j]) {
        throw std::invalid_argument("hypervolume: point lies beyond the reference point");
      }
    }
  }
  // Dominated points add nothing; dropping them keeps the slab recursion small.
  std::vector<std::vector<double>> nd;
  for (std::size_t i = 0; i < front.size(); ++i) {
    bool dominated = false;
    for (std::size_t k = 0; k < front.size() && !dominated; ++k) {
      if (k == i) continue;
      bool le = true;
      bool lt = false;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        le = le && front[k][j] <= front[i][j];
        lt = lt || front[k][j] < front[i][j];
      }
      // identical points: keep the first copy only
      dominated = le && (lt || k < i);
    }
    if (!dominated) nd.push_back(front[i]);
  }
  return hv_recursive(std::move(nd), ref, ref.size());
}

Normalizer Normalizer::identity(std::size_t dims) {
  return Normalizer{std::vector<double>(dims, 0.0), std::vector<double>(dims, 1.0)};
}

Normalizer Normalizer::from_points(std::span<const ObjectiveVector> objs) {
  Normalizer n{std::vector<double>(3, std::numeric_limits<double>::infinity()),
               std::vector<double>(3, -std::numeric_limits<double>::infinity())};
  for (const auto& o : objs) {
    const auto v = o.values();
    for (std::size_t j = 0; j < 3; ++j) {
      n.lo[j] = std::min(n.lo[j], v[j]);
      n.hi[j] = std::max(n.hi[j], v[j]);
    }
  }
  if (objs.empty()) return identity(3);
  return n;
}

std::vector<double> Normalizer::apply(std::span<const double> v) const {
  std::vector<double> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double range = hi[j] - lo[j];
    out[j] = range > 0.0 ? (v[j] - lo[j]) / range : v[j] - lo[j];
  }
  return out;
}

namespace {

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d2 = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(d2);
}

std::vector<std::vector<double>> normalized(std::span<const ObjectiveVector> objs,
                                            const Normalizer& norm) {
  std::vector<std::vector<double>> out;
  out.reserve(objs.size());
  for (const auto& o : objs) {
    const auto v = o.values();
    out.push_back(norm.apply(v));
  }
  return out;
}

} // namespace

double diversity_metric(std::span<const ObjectiveVector> pop, const Normalizer& norm) {
  if (pop.size() < 2) return 0.0;
  const auto pts = normalized(pop, norm);
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      total += distance(pts[i], pts[j]);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

double convergence_metric(std::span<const ObjectiveVector> front,
                          std::span<const ObjectiveVector> previous, const Normalizer& norm) {
  if (front.empty() || previous.empty()) return 0.0;
  const auto cur = normalized(front, norm);
  const auto prev = normalized(previous, norm);
  double total = 0.0;
  for (const auto& p : cur) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : prev) best = std::min(best, distance(p, q));
    total += best;
  }
  return total / static_cast<double>(cur.size());
}

namespace {

std::size_t hash_waveform(const TimeSeries& s) {
  // FNV-1a over the sample bit patterns
  std::size_t h = 1469598103934665603ull;
  for (double v : s.values()) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    h ^= bits;
    h *= 1099511628211ull;
  }
  return h;
}

} // namespace

bool CfeArchive::add(const Candidate& c) {
  if (!c.objective || !c.objective->feasible) {
    return false;
  }
  const std::size_t h = hash_waveform(c.waveform);
  const auto [lo, hi] = by_hash_.equal_range(h);
  for (auto it = lo; it != hi; ++it) {
    if (members_[it->second].waveform == c.waveform) {
      return false;
    }
  }
  by_hash_.emplace(h, members_.size());
  members_.push_back(c);
  members_.back().rank.reset();
  return true;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<ObjectiveVector> objectives_of(const std::vector<Candidate>& pop) {
  std::vector<ObjectiveVector> out;
  out.reserve(pop.size());
  for (const auto& c : pop) out.push_back(*c.objective);
  return out;
}

// Non-dominated subset of the feasible archive, maintained incrementally.
class ArchiveFront {
public:
  void insert(const ObjectiveVector& o) {
    const auto p = to_point(o);
    for (const auto& q : points_) {
      if (constrained_dominates(q, p) || q.values == p.values) return;
    }
    std::erase_if(points_, [&](const ObjectivePoint& q) { return constrained_dominates(p, q); });
    points_.push_back(p);
  }

  double hypervolume_within(const std::vector<double>& ref) const {
    std::vector<std::vector<double>> inside;
    for (const auto& p : points_) {
      bool ok = true;
      for (std::size_t j = 0; j < ref.size(); ++j) ok = ok && p.values[j] <= ref[j];
      if (ok) inside.push_back(p.values);
    }
    return hypervolume(inside, ref);
  }

private:
  std::vector<ObjectivePoint> points_;
};

} // namespace

CfeArchive run(const TimeSeries& x, const TargetSpec& target, const MorphSpec& spec,
               const ReferenceSet& refset, const RegressorPtr& regressor, const RunConfig& cfg,
               const BlendParams& blend, std::size_t gamma) {
  cfg.validate();
  if (refset.series_length() != x.size()) {
    throw std::invalid_argument("run: reference set length differs from the query");
  }
  const ObjectiveEvaluator evaluator(x, spec, target, regressor);
  const auto refpoints = reference_points(3, cfg.reference_divisions);
  std::mt19937_64 master(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  CfeArchive archive;
  ArchiveFront archive_front;
  std::size_t generation = 0;
  auto evaluate = [&](std::vector<Candidate>& group) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      auto& c = group[i];
      if (c.objective) continue;
      try {
        c.objective = evaluator.evaluate(c.waveform);
      } catch (const EvaluationError& e) {
        throw EvaluationError("generation " + std::to_string(generation) + ", candidate " +
                              std::to_string(i) + ": " + e.what());
      }
      if (archive.add(c)) {
        archive_front.insert(*c.objective);
      }
    }
  };
  auto assign_ranks = [](std::vector<Candidate>& pop) {
    const auto objs = objectives_of(pop);
    const auto fronts = non_dominated_sort(objs);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
      for (std::size_t i : fronts[f]) pop[i].rank = f + 1;
    }
  };
  auto first_front = [](const std::vector<Candidate>& pop) {
    std::vector<ObjectiveVector> out;
    for (const auto& c : pop) {
      if (c.rank == 1u) out.push_back(*c.objective);
    }
    return out;
  };

  std::vector<Candidate> pop = init_population(refset, cfg.population, gamma, master());
  evaluate(pop);
  assign_ranks(pop);

  const auto initial = objectives_of(pop);
  const Normalizer norm = Normalizer::from_points(initial);
  std::vector<double> hv_ref(3);
  for (std::size_t j = 0; j < 3; ++j) {
    const double hi = norm.hi[j] * 1.1;
    hv_ref[j] = hi > 0.0 ? hi : 1.0;
  }

  std::vector<ObjectiveVector> previous_front;
  auto record = [&]() {
    const auto objs = objectives_of(pop);
    GenStats s;
    s.generation = generation;
    std::vector<double> m, g, o;
    for (const auto& v : objs) {
      m.push_back(v.morph);
      g.push_back(v.maxgrad);
      o.push_back(v.out);
      s.n_feasible += v.feasible ? 1 : 0;
    }
    s.median_morph = median(m);
    s.median_maxgrad = median(g);
    s.median_out = median(o);
    s.diversity = diversity_metric(objs, norm);
    s.hypervolume = archive_front.hypervolume_within(hv_ref);
    const auto front = first_front(pop);
    s.convergence = previous_front.empty() ? 0.0 : convergence_metric(front, previous_front, norm);
    s.archive_size = archive.size();
    s.front_size = front.size();
    archive.per_generation_stats.push_back(s);
    previous_front = front;
  };
  record();

  for (generation = 1; generation <= cfg.generations; ++generation) {
    std::vector<Candidate> offspring = tournament_select(pop, cfg.population, master());
    for (std::size_t j = 1; j < offspring.size(); j += 2) {
      if (unif(master) < cfg.p_crossover) {
        auto [c1, c2] = crossover(offspring[j - 1], offspring[j], blend, master());
        offspring[j - 1] = std::move(c1);
        offspring[j] = std::move(c2);
      }
    }
    for (auto& c : offspring) {
      if (unif(master) < cfg.p_mutation) {
        c = mutate(c, refset, blend, master());
      }
    }
    evaluate(offspring);
    for (auto& c : offspring) pop.push_back(std::move(c));
    pop = environmental_select(std::move(pop), cfg.population, refpoints, master());
    record();
  }

  assign_ranks(pop);
  for (const auto& c : pop) {
    if (c.rank == 1u) archive.final_front.push_back(c);
  }
  return archive;
}

} // namespace morphcf
