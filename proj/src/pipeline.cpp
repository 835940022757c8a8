#include "glassmem/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <json.hpp>
#include <numeric>
#include <ostream>
#include <unsupported/Eigen/NonLinearOptimization>

#include "glassmem/error.hpp"
#include "glassmem/io.hpp"
#include "glassmem/parallel.hpp"

namespace glassmem {

namespace {

// Unit-norm version of a configuration for overlap distances.
SpinConfig unit(const SpinConfig& s) { return s.is_binary() ? s.uniform_amplitude() : s.normalized(); }

std::size_t max_errors(std::size_t n) { return std::max<std::size_t>(1, n / 2); }

struct TanhResiduals {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  std::span<const RecallPoint> points;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(points.size()); }

  int operator()(const Eigen::VectorXd& a, Eigen::VectorXd& r) const {
    for (std::size_t k = 0; k < points.size(); ++k) {
      const double e = static_cast<double>(points[k].errors);
      const double w = std::sqrt(static_cast<double>(points[k].trials));
      r[static_cast<Eigen::Index>(k)] = w * (a[0] * (1.0 - std::tanh(a[1] * e - a[2])) - points[k].p);
    }
    return 0;
  }

  int df(const Eigen::VectorXd& a, Eigen::MatrixXd& jac) const {
    for (std::size_t k = 0; k < points.size(); ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      const double e = static_cast<double>(points[k].errors);
      const double w = std::sqrt(static_cast<double>(points[k].trials));
      const double t = std::tanh(a[1] * e - a[2]);
      const double sech2 = 1.0 - t * t;
      jac(row, 0) = w * (1.0 - t);
      jac(row, 1) = -w * a[0] * sech2 * e;
      jac(row, 2) = w * a[0] * sech2;
    }
    return 0;
  }
};

double sse(std::span<const RecallPoint> points, const Eigen::Vector3d& a) {
  double s = 0.0;
  for (const auto& p : points) {
    const double e = static_cast<double>(p.errors);
    const double r = a[0] * (1.0 - std::tanh(a[1] * e - a[2])) - p.p;
    s += static_cast<double>(p.trials) * r * r;
  }
  return s;
}

bool finite(const Eigen::Vector3d& a) { return a.allFinite(); }

// Nelder-Mead on the weighted sum of squares.
Eigen::Vector3d simplex_minimize(std::span<const RecallPoint> points, Eigen::Vector3d start) {
  std::array<Eigen::Vector3d, 4> v;
  std::array<double, 4> f;
  v[0] = start;
  for (int k = 0; k < 3; ++k) {
    v[k + 1] = start;
    v[k + 1][k] += std::max(0.1, 0.25 * std::abs(start[k]));
  }
  for (int k = 0; k < 4; ++k) f[k] = sse(points, v[k]);
  for (int iter = 0; iter < 2000; ++iter) {
    std::array<int, 4> order = {0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
    const int best = order[0];
    const int worst = order[3];
    const int second = order[2];
    if (std::abs(f[worst] - f[best]) <= 1e-14 * (std::abs(f[best]) + 1e-14)) break;
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (int k = 0; k < 3; ++k) centroid += v[order[k]];
    centroid /= 3.0;
    const Eigen::Vector3d refl = centroid + (centroid - v[worst]);
    const double fr = sse(points, refl);
    if (fr < f[best]) {
      const Eigen::Vector3d exp = centroid + 2.0 * (centroid - v[worst]);
      const double fe = sse(points, exp);
      if (fe < fr) {
        v[worst] = exp;
        f[worst] = fe;
      } else {
        v[worst] = refl;
        f[worst] = fr;
      }
    } else if (fr < f[second]) {
      v[worst] = refl;
      f[worst] = fr;
    } else {
      const Eigen::Vector3d con = centroid + 0.5 * (v[worst] - centroid);
      const double fc = sse(points, con);
      if (fc < f[worst]) {
        v[worst] = con;
        f[worst] = fc;
      } else {
        for (int k = 0; k < 4; ++k) {
          if (k == best) continue;
          v[k] = v[best] + 0.5 * (v[k] - v[best]);
          f[k] = sse(points, v[k]);
        }
      }
    }
  }
  return v[static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin())];
}

double basin_of(std::span<const RecallPoint> points, std::size_t n, double threshold, bool* interpolated) {
  const auto fit = fit_tanh(points, n);
  const double cap = static_cast<double>(max_errors(n));
  if (fit) {
    const double b = tanh_crossing(*fit, threshold, cap);
    if (std::isfinite(b)) {
      if (interpolated) *interpolated = false;
      return b;
    }
  }
  if (interpolated) *interpolated = true;
  return std::clamp(interpolated_crossing(points, threshold), 0.0, cap);
}

}  // namespace

SpinConfig RelaxOracle::recall(const SpinConfig& stimulus, RandomSource& rng) const {
  return relax(J_, stimulus, kind_, rng);
}

std::size_t default_sample_count(std::size_t n) {
  if (n <= 4) return 50;
  if (n <= 8) return 100;
  if (n <= 12) return 200;
  return 400;
}

std::vector<SpinConfig> sample_attractors(const NetworkOracle& oracle, std::size_t samples, const RandomSource& rng,
                                          unsigned threads) {
  if (samples == 0) throw ValidationError("need at least one sample");
  return parallel_map<SpinConfig>(samples, threads, [&](std::size_t k) {
    RandomSource r = rng.split(k);
    return oracle.recall(SpinConfig::random_binary(oracle.size(), r), r);
  });
}

std::string to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::Average:
      return "average";
    case Linkage::Single:
      return "single";
    case Linkage::Complete:
      return "complete";
  }
  return "average";
}

Linkage parse_linkage(std::string_view text) {
  if (text == "average") return Linkage::Average;
  if (text == "single") return Linkage::Single;
  if (text == "complete") return Linkage::Complete;
  throw ValidationError("unknown linkage '" + std::string(text) + "'");
}

ClusterTree ClusterTree::build(std::span<const SpinConfig> configs, Linkage linkage) {
  const std::size_t m = configs.size();
  if (m == 0) throw ValidationError("cannot cluster an empty sample");
  const std::size_t n = configs[0].size();
  for (const auto& c : configs)
    if (c.size() != n) throw SizeError("sampled configurations differ in size");

  ClusterTree tree;
  tree.leaves_ = m;

  // Exact duplicates merge first at height zero; the remaining distinct patterns are
  // clustered with multiplicities, which reproduces linkage over all samples.
  std::map<std::vector<double>, std::size_t> seen;
  std::vector<std::size_t> node;   // current tree node of each distinct pattern
  std::vector<double> weight;      // samples in it
  std::vector<SpinConfig> units;
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> key(configs[k].values().begin(), configs[k].values().end());
    auto [it, inserted] = seen.emplace(std::move(key), node.size());
    if (inserted) {
      node.push_back(k);
      weight.push_back(1.0);
      units.push_back(unit(configs[k]));
    } else {
      const std::size_t g = it->second;
      weight[g] += 1.0;
      tree.merges_.push_back({node[g], k, 0.0, static_cast<std::size_t>(weight[g])});
      node[g] = m + tree.merges_.size() - 1;
    }
  }

  const std::size_t u = units.size();
  std::vector<double> d(u * u, 0.0);
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = i + 1; j < u; ++j) d[i * u + j] = d[j * u + i] = overlap_distance(units[i], units[j]);

  std::vector<bool> active(u, true);
  for (std::size_t step = 1; step < u; ++step) {
    std::size_t bi = 0;
    std::size_t bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < u; ++j) {
        if (active[j] && d[i * u + j] < best) {
          best = d[i * u + j];
          bi = i;
          bj = j;
        }
      }
    }
    for (std::size_t k = 0; k < u; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double a = d[bi * u + k];
      const double b = d[bj * u + k];
      double v = 0.0;
      switch (linkage) {
        case Linkage::Average:
          v = (weight[bi] * a + weight[bj] * b) / (weight[bi] + weight[bj]);
          break;
        case Linkage::Single:
          v = std::min(a, b);
          break;
        case Linkage::Complete:
          v = std::max(a, b);
          break;
      }
      d[bi * u + k] = d[k * u + bi] = v;
    }
    weight[bi] += weight[bj];
    active[bj] = false;
    tree.merges_.push_back({node[bi], node[bj], best, static_cast<std::size_t>(weight[bi])});
    node[bi] = m + tree.merges_.size() - 1;
  }
  return tree;
}

std::vector<std::size_t> ClusterTree::cut(double height) const {
  // A subtree survives when its root and every internal node below it lie under the cut.
  std::vector<std::size_t> parent(leaves_);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<bool> kept(merges_.size(), false);
  std::vector<std::size_t> rep(merges_.size());
  auto node_kept = [&](std::size_t id) { return id < leaves_ || kept[id - leaves_]; };
  auto node_rep = [&](std::size_t id) { return id < leaves_ ? id : rep[id - leaves_]; };
  for (std::size_t k = 0; k < merges_.size(); ++k) {
    const auto& mg = merges_[k];
    rep[k] = node_rep(mg.left);
    kept[k] = mg.height < height && node_kept(mg.left) && node_kept(mg.right);
    if (kept[k]) parent[find(node_rep(mg.right))] = find(node_rep(mg.left));
  }
  std::vector<std::size_t> labels(leaves_);
  std::map<std::size_t, std::size_t> number;
  for (std::size_t i = 0; i < leaves_; ++i) {
    const auto [it, inserted] = number.emplace(find(i), number.size());
    labels[i] = it->second;
  }
  return labels;
}

std::string ClusterTree::to_json() const {
  nlohmann::json j;
  j["leaves"] = leaves_;
  auto& merges = j["merges"] = nlohmann::json::array();
  for (const auto& m : merges_) merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  return j.dump();
}

std::vector<Candidate> cluster_candidates(std::span<const SpinConfig> configs, double cut, double noise_floor,
                                          Linkage linkage) {
  const auto tree = ClusterTree::build(configs, linkage);
  const auto labels = tree.cut(cut);
  const auto floor_labels = tree.cut(noise_floor);
  const std::size_t clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;

  std::vector<Candidate> out(clusters);
  for (std::size_t k = 0; k < configs.size(); ++k) out[labels[k]].members.push_back(k);
  for (auto& c : out) {
    std::map<SpinConfig, std::size_t> freq;
    for (const auto k : c.members) ++freq[configs[k].signs()];
    std::size_t best = 0;
    for (const auto& [pattern, count] : freq) {
      if (count > best) {
        best = count;
        c.reference = pattern;
      }
    }
    std::size_t floor_label = 0;
    for (const auto k : c.members) {
      if (configs[k].signs() == c.reference) {
        floor_label = floor_labels[k];
        break;
      }
    }
    std::map<SpinConfig, bool> group;
    for (const auto k : c.members) {
      if (floor_labels[k] != floor_label) continue;
      group[configs[k].signs()] = true;
      ++c.group_count;
    }
    for (const auto& [pattern, _] : group) c.group.push_back(pattern);
  }
  return out;
}

RecallMatch::RecallMatch(SpinConfig reference, std::vector<SpinConfig> group, double noise_floor, bool strict)
    : reference_(reference.signs()), group_(), noise_floor_(noise_floor), strict_(strict) {
  for (const auto& g : group) {
    if (g.size() != reference_.size()) throw SizeError("group member size differs from the reference");
    group_.push_back(unit(g));
  }
  group_.push_back(unit(reference_));
}

bool RecallMatch::operator()(const SpinConfig& output) const {
  if (output.size() != reference_.size()) throw SizeError("oracle output size differs from the reference");
  if (strict_) return output.signs() == reference_;
  const auto u = unit(output);
  return std::any_of(group_.begin(), group_.end(),
                     [&](const SpinConfig& g) { return overlap_distance(u, g) < noise_floor_; });
}

RecallTrial recall_trial(const NetworkOracle& oracle, const RecallMatch& match, std::size_t errors,
                         RandomSource& rng) {
  const auto stimulus = apply_errors(match.reference(), errors, rng);
  return {errors, match(oracle.recall(stimulus, rng))};
}

Screening screen_candidate(const NetworkOracle& oracle, const RecallMatch& match, RandomSource& rng,
                           std::size_t trials, double pass_threshold) {
  if (trials == 0) throw ValidationError("screening needs at least one trial");
  Screening s;
  std::size_t ok = 0;
  for (std::size_t k = 0; k < trials; ++k) {
    s.trials.push_back(recall_trial(oracle, match, 0, rng));
    ok += s.trials.back().success;
  }
  s.p0 = static_cast<double>(ok) / static_cast<double>(trials);
  s.pass = s.p0 >= pass_threshold;
  return s;
}

double TanhFit::operator()(double e) const { return a1 * (1.0 - std::tanh(a2 * e - a3)); }

double tanh_crossing(const TanhFit& fit, double threshold, double max_errors) {
  if (!(fit.a1 > 0.5 * threshold)) return 0.0;
  if (!(fit.a2 > 0.0)) return fit(max_errors) >= threshold ? max_errors : 0.0;
  const double b = (fit.a3 + std::atanh(1.0 - threshold / fit.a1)) / fit.a2;
  if (std::isnan(b)) return b;
  return std::clamp(b, 0.0, max_errors);
}

std::vector<RecallPoint> aggregate(std::span<const RecallTrial> trials) {
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> by_level;
  for (const auto& t : trials) {
    auto& [ok, total] = by_level[t.errors];
    ok += t.success;
    ++total;
  }
  std::vector<RecallPoint> out;
  for (const auto& [e, counts] : by_level)
    out.push_back({e, static_cast<double>(counts.first) / static_cast<double>(counts.second), counts.second});
  return out;
}

std::optional<TanhFit> fit_tanh(std::span<const RecallPoint> points, std::size_t n) {
  if (points.size() < 3) return std::nullopt;
  double pmax = 0.0;
  for (const auto& p : points) pmax = std::max(pmax, p.p);
  const double a1_start = std::max(0.05, 0.5 * pmax);

  TanhResiduals f{points};
  std::optional<Eigen::Vector3d> best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s <= max_errors(n); ++s) {
    Eigen::VectorXd a(3);
    a << a1_start, 1.0, static_cast<double>(s);
    Eigen::LevenbergMarquardt<TanhResiduals> lm(f);
    lm.parameters.xtol = 1e-8;
    lm.parameters.maxfev = 400;
    lm.minimize(a);
    const Eigen::Vector3d v = a;
    if (!finite(v)) continue;
    const double e = sse(points, v);
    if (e < best_sse) {
      best_sse = e;
      best = v;
    }
  }
  if (!best) {
    const Eigen::Vector3d v = simplex_minimize(points, {a1_start, 1.0, 0.5 * static_cast<double>(max_errors(n))});
    if (!finite(v)) return std::nullopt;
    best = v;
    best_sse = sse(points, v);
  }
  return TanhFit{(*best)[0], (*best)[1], (*best)[2], best_sse};
}

double interpolated_crossing(std::span<const RecallPoint> points, double threshold) {
  if (points.empty()) return 0.0;
  // Pool adjacent violators for a non-increasing fit.
  struct Block {
    double sum;
    double weight;
    std::size_t first;
    std::size_t last;
  };
  std::vector<Block> blocks;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double w = static_cast<double>(points[k].trials);
    blocks.push_back({points[k].p * w, w, k, k});
    while (blocks.size() > 1) {
      auto& b = blocks[blocks.size() - 1];
      auto& a = blocks[blocks.size() - 2];
      if (a.sum / a.weight >= b.sum / b.weight) break;
      a.sum += b.sum;
      a.weight += b.weight;
      a.last = b.last;
      blocks.pop_back();
    }
  }
  std::vector<double> fitted(points.size());
  for (const auto& b : blocks)
    for (std::size_t k = b.first; k <= b.last; ++k) fitted[k] = b.sum / b.weight;

  if (fitted[0] < threshold) return 0.0;
  for (std::size_t k = 1; k < points.size(); ++k) {
    if (fitted[k] < threshold) {
      const double e0 = static_cast<double>(points[k - 1].errors);
      const double e1 = static_cast<double>(points[k].errors);
      return e0 + (fitted[k - 1] - threshold) / (fitted[k - 1] - fitted[k]) * (e1 - e0);
    }
  }
  return static_cast<double>(points.back().errors);
}

RecallCurve analyze_recall(std::vector<RecallTrial> trials, std::size_t n, double threshold, RandomSource& rng,
                           std::size_t bootstrap, double default_err) {
  RecallCurve c;
  c.trials = std::move(trials);
  c.points = aggregate(c.trials);
  c.fit = fit_tanh(c.points, n);
  c.basin = basin_of(c.points, n, threshold, &c.interpolated);
  if (c.interpolated) c.fit.reset();
  if (c.fit)
    for (const auto& p : c.points) c.residuals.push_back(p.p - (*c.fit)(static_cast<double>(p.errors)));

  std::vector<double> resampled;
  std::vector<RecallTrial> draw(c.trials.size());
  for (std::size_t b = 0; b < bootstrap && !c.trials.empty(); ++b) {
    for (auto& t : draw) t = c.trials[rng.index(c.trials.size())];
    const double v = basin_of(aggregate(draw), n, threshold, nullptr);
    if (std::isfinite(v)) resampled.push_back(v);
  }
  c.basin_err = resampled.size() >= 2 ? stats::stddev(resampled) : 0.0;
  if (!(c.basin_err > 0.0)) c.basin_err = default_err;
  return c;
}

RecallCurve estimate_basin(const NetworkOracle& oracle, const RecallMatch& match, RandomSource& rng,
                           const BasinOptions& opts, std::span<const RecallTrial> zero_error) {
  const std::size_t n = oracle.size();
  const std::size_t top = max_errors(n);
  std::vector<RecallTrial> trials(zero_error.begin(), zero_error.end());
  std::size_t zeros = 0;
  for (const auto& t : trials) zeros += t.errors == 0;
  for (; zeros < opts.p0_trials; ++zeros) trials.push_back(recall_trial(oracle, match, 0, rng));

  for (std::size_t k = 0; k < opts.adaptive_trials; ++k) {
    std::size_t e = 0;
    if (k == 0) {
      e = 1 + rng.index(top);
    } else {
      const double b = basin_of(aggregate(trials), n, opts.threshold, nullptr);
      std::vector<double> w(top);
      for (std::size_t j = 0; j < top; ++j) {
        const double x = static_cast<double>(j + 1) - b;
        w[j] = 1.0 / (x * x + opts.sampling_width * opts.sampling_width);
      }
      std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
      e = 1 + pick(rng.engine());
    }
    trials.push_back(recall_trial(oracle, match, std::min(e, n), rng));
  }
  return analyze_recall(std::move(trials), n, opts.threshold, rng, opts.bootstrap, opts.default_err);
}

VolumeEstimate basin_volume(std::size_t hits, std::size_t total, std::size_t n, RandomSource& rng, std::size_t reps) {
  if (total == 0) throw ValidationError("basin volume needs at least one sample");
  if (hits > total) throw ValidationError("hits exceed the number of samples");
  const double space = std::ldexp(1.0, static_cast<int>(n));
  const double p = static_cast<double>(hits) / static_cast<double>(total);
  VolumeEstimate v{space * p, 0.0};
  if (reps >= 2) {
    // Resampling the attractor list with replacement makes the hit count binomial.
    std::binomial_distribution<std::size_t> draw(total, p);
    std::vector<double> vols(reps);
    for (auto& x : vols) x = space * static_cast<double>(draw(rng.engine())) / static_cast<double>(total);
    v.err = stats::stddev(vols);
  }
  return v;
}

double volume_bound(std::size_t n, double capacity) {
  if (!(capacity > 0.0)) throw ValidationError("volume bound needs a positive capacity");
  return std::ldexp(1.0, static_cast<int>(n)) / capacity;
}

SamplesCurve capacity_vs_samples(std::span<const long> labels, RandomSource& rng, std::size_t reps) {
  const std::size_t m = labels.size();
  if (m == 0) throw ValidationError("capacity_vs_samples needs samples");
  if (reps == 0) throw ValidationError("capacity_vs_samples needs bootstrap repetitions");
  SamplesCurve c;
  for (std::size_t k = 2; k <= 8; ++k) {
    const std::size_t s = std::max<std::size_t>(1, m * k / 8);
    if (c.sizes.empty() || c.sizes.back() != s) c.sizes.push_back(s);
  }
  std::vector<long> draw;
  for (const std::size_t s : c.sizes) {
    double sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      draw.resize(s);
      for (auto& v : draw) v = labels[rng.index(m)];
      std::sort(draw.begin(), draw.end());
      const auto end = std::unique(draw.begin(), draw.end());
      sum += static_cast<double>(std::count_if(draw.begin(), end, [](long v) { return v >= 0; }));
    }
    c.found.push_back(sum / static_cast<double>(reps));
  }
  if (c.sizes.size() >= 2) {
    std::vector<double> inv;
    for (const auto s : c.sizes) inv.push_back(1.0 / static_cast<double>(s));
    c.fit = stats::fit_line(inv, c.found);
    c.intercept = c.fit.intercept;
  } else {
    c.intercept = c.found.back();
    c.fit.intercept = c.intercept;
  }
  c.fraction_found = c.intercept > 0.0 ? c.found.back() / c.intercept : 0.0;
  return c;
}

std::vector<SpinConfig> PipelineReport::memories() const {
  std::vector<SpinConfig> out;
  for (const auto& r : records)
    if (r.is_memory) out.push_back(r.reference);
  return out;
}

PipelineReport capacity(const NetworkOracle& oracle, const RandomSource& rng, const PipelineOptions& opts) {
  const std::size_t n = oracle.size();
  PipelineReport rep;
  rep.n = n;
  rep.seed = rng.seed();
  rep.options = opts;
  const std::size_t samples = opts.samples ? opts.samples : default_sample_count(n);
  rep.samples = sample_attractors(oracle, samples, rng.split(1), opts.threads);
  rep.candidates = cluster_candidates(rep.samples, opts.cut, opts.noise_floor, opts.linkage);

  const bool exact = opts.exact_single_flip && oracle.deterministic();
  const double threshold = opts.basin.threshold;
  rep.records = parallel_map<MemoryRecord>(rep.candidates.size(), opts.threads, [&](std::size_t c) {
    const auto& cand = rep.candidates[c];
    RandomSource r = rng.split(2, c);
    MemoryRecord m;
    m.candidate = c;
    m.reference = cand.reference;
    const RecallMatch match(cand, opts.noise_floor, opts.strict_match);
    const auto screening = screen_candidate(oracle, match, r, opts.screen_trials, opts.pass_threshold);
    m.p0 = screening.p0;
    m.screened = screening.pass;
    m.volume = basin_volume(cand.group_count, samples, n, r);
    if (!m.screened) return m;
    m.curve = estimate_basin(oracle, match, r, opts.basin, screening.trials);
    if (exact) {
      std::size_t ok = 0;
      for (std::size_t k = 0; k < n; ++k) ok += match(oracle.recall(cand.reference.flipped(k), r));
      m.exact_recall = static_cast<double>(ok) / static_cast<double>(n);
      m.is_memory = *m.exact_recall > threshold;
    } else {
      m.is_memory = m.curve.basin >= 1.0;
    }
    return m;
  });

  for (const auto& m : rep.records) rep.capacity += m.is_memory;
  if (exact) {
    rep.capacity_mean = static_cast<double>(rep.capacity);
    rep.capacity_std = 0.0;
  } else {
    RandomSource r = rng.split(3);
    std::vector<double> counts(opts.capacity_bootstrap);
    for (auto& count : counts) {
      double k = 0.0;
      for (const auto& m : rep.records) {
        if (!m.screened) continue;
        const double b = std::max(0.0, m.curve.basin + r.normal(0.0, m.curve.basin_err));
        k += b >= 1.0;
      }
      count = k;
    }
    rep.capacity_mean = counts.empty() ? static_cast<double>(rep.capacity) : stats::mean(counts);
    rep.capacity_std = stats::stddev(counts);
  }
  rep.volume_bound = rep.capacity_mean > 0.0 ? volume_bound(n, rep.capacity_mean) : 0.0;

  std::vector<long> labels(rep.samples.size(), -1);
  long memory_index = 0;
  for (const auto& m : rep.records) {
    if (!m.is_memory) continue;
    for (const auto k : rep.candidates[m.candidate].members) labels[k] = memory_index;
    ++memory_index;
  }
  RandomSource r = rng.split(4);
  rep.samples_curve = capacity_vs_samples(labels, r, opts.samples_bootstrap);
  return rep;
}

std::string report_json(const PipelineReport& report) {
  using nlohmann::json;
  const auto& o = report.options;
  json j;
  j["n"] = report.n;
  j["seed"] = report.seed;
  j["samples"] = report.samples.size();
  j["candidates"] = report.candidates.size();
  j["options"] = {{"cut", o.cut},
                  {"noise_floor", o.noise_floor},
                  {"linkage", to_string(o.linkage)},
                  {"screen_trials", o.screen_trials},
                  {"pass_threshold", o.pass_threshold},
                  {"recall_threshold", o.basin.threshold},
                  {"p0_trials", o.basin.p0_trials},
                  {"adaptive_trials", o.basin.adaptive_trials},
                  {"basin_bootstrap", o.basin.bootstrap},
                  {"capacity_bootstrap", o.capacity_bootstrap},
                  {"strict_match", o.strict_match},
                  {"exact_single_flip", o.exact_single_flip}};
  j["capacity"] = {{"count", report.capacity}, {"mean", report.capacity_mean}, {"std", report.capacity_std}};
  j["volume_bound"] = report.volume_bound;
  auto& mem = j["candidates_detail"] = json::array();
  for (const auto& m : report.records) {
    json e{{"candidate", m.candidate},
           {"reference", io::format_spin_config(m.reference)},
           {"cluster_size", report.candidates[m.candidate].members.size()},
           {"p0", m.p0},
           {"screened", m.screened},
           {"is_memory", m.is_memory},
           {"volume", m.volume.volume},
           {"volume_err", m.volume.err}};
    if (m.screened) {
      e["basin"] = m.curve.basin;
      e["basin_err"] = m.curve.basin_err;
      e["interpolated"] = m.curve.interpolated;
      if (m.curve.fit) {
        e["fit"] = {{"a1", m.curve.fit->a1}, {"a2", m.curve.fit->a2}, {"a3", m.curve.fit->a3}, {"sse", m.curve.fit->sse}};
        e["residuals"] = m.curve.residuals;
      }
      auto& pts = e["points"] = json::array();
      for (const auto& p : m.curve.points) pts.push_back({p.errors, p.p, p.trials});
    }
    if (m.exact_recall) e["exact_single_flip_recall"] = *m.exact_recall;
    mem.push_back(std::move(e));
  }
  auto memories = json::array();
  for (const auto& s : report.memories()) memories.push_back(io::format_spin_config(s));
  j["memories"] = std::move(memories);
  const auto& sc = report.samples_curve;
  j["capacity_vs_samples"] = {{"sizes", sc.sizes},
                              {"found", sc.found},
                              {"slope", sc.fit.slope},
                              {"intercept", sc.intercept},
                              {"fraction_found", sc.fraction_found}};
  return j.dump(2);
}

void write_recall_trials_csv(std::ostream& out, const PipelineReport& report) {
  out << "candidate,errors,success\n";
  for (const auto& m : report.records)
    for (const auto& t : m.curve.trials) out << m.candidate << ',' << t.errors << ',' << (t.success ? 1 : 0) << '\n';
}

}  // namespace glassmem
