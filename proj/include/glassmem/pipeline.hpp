#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glassmem/dynamics.hpp"
#include "glassmem/random.hpp"
#include "glassmem/spin.hpp"
#include "glassmem/stats.hpp"

namespace glassmem {

/// Anything that maps a stimulus to a recalled configuration.
class NetworkOracle {
 public:
  virtual ~NetworkOracle() = default;
  virtual std::size_t size() const = 0;
  /// Must be safe to call concurrently; all randomness comes from `rng`.
  virtual SpinConfig recall(const SpinConfig& stimulus, RandomSource& rng) const = 0;
  /// True when the output never depends on `rng`.
  virtual bool deterministic() const { return false; }
};

class IdentityOracle final : public NetworkOracle {
 public:
  explicit IdentityOracle(std::size_t n) : n_(n) {}
  std::size_t size() const override { return n_; }
  SpinConfig recall(const SpinConfig& stimulus, RandomSource&) const override { return stimulus; }
  bool deterministic() const override { return true; }

 private:
  std::size_t n_;
};

/// Zero-temperature relaxation of a fixed coupling matrix.
class RelaxOracle final : public NetworkOracle {
 public:
  RelaxOracle(CouplingMatrix J, DynamicsKind kind) : J_(std::move(J)), kind_(kind) {}
  std::size_t size() const override { return J_.size(); }
  SpinConfig recall(const SpinConfig& stimulus, RandomSource& rng) const override;
  bool deterministic() const override { return kind_.deterministic(); }

 private:
  CouplingMatrix J_;
  DynamicsKind kind_;
};

/// Wraps a callable; used for synthetic oracles.
class FunctionOracle final : public NetworkOracle {
 public:
  using Fn = std::function<SpinConfig(const SpinConfig&, RandomSource&)>;
  FunctionOracle(std::size_t n, Fn fn, bool deterministic = false)
      : n_(n), fn_(std::move(fn)), deterministic_(deterministic) {}
  std::size_t size() const override { return n_; }
  SpinConfig recall(const SpinConfig& stimulus, RandomSource& rng) const override { return fn_(stimulus, rng); }
  bool deterministic() const override { return deterministic_; }

 private:
  std::size_t n_;
  Fn fn_;
  bool deterministic_;
};

/// Random samples per network: 50, 100, 200 and 400 for n up to 4, 8, 12 and beyond.
std::size_t default_sample_count(std::size_t n);

/// Outputs of the oracle for `samples` uniformly random binary stimuli. Sample k uses
/// stream rng.split(k).
std::vector<SpinConfig> sample_attractors(const NetworkOracle& oracle, std::size_t samples, const RandomSource& rng,
                                          unsigned threads = 0);

enum class Linkage { Average, Single, Complete };

std::string to_string(Linkage linkage);
Linkage parse_linkage(std::string_view text);

/// Internal node of the dendrogram. Leaves are 0..m-1; merge k creates node m + k.
struct MergeNode {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

/// Agglomerative clustering on overlap distance. Heights are stored as computed.
class ClusterTree {
 public:
  static ClusterTree build(std::span<const SpinConfig> configs, Linkage linkage = Linkage::Average);

  std::size_t leaves() const noexcept { return leaves_; }
  const std::vector<MergeNode>& merges() const noexcept { return merges_; }

  /// Cluster label of every leaf after applying only merges with height < `height`.
  /// Labels are numbered in order of each cluster's first leaf.
  std::vector<std::size_t> cut(double height) const;

  std::string to_json() const;

 private:
  std::size_t leaves_ = 0;
  std::vector<MergeNode> merges_;
};

/// A cluster of sampled outputs and its most frequently observed sign pattern.
struct Candidate {
  SpinConfig reference;
  std::vector<std::size_t> members;  // sample indices
  std::vector<SpinConfig> group;     // distinct patterns within the noise floor of the reference
  std::size_t group_count = 0;       // samples in that group
};

std::vector<Candidate> cluster_candidates(std::span<const SpinConfig> configs, double cut = 1.0,
                                          double noise_floor = 0.21, Linkage linkage = Linkage::Average);

/// Decides whether an oracle output recalls a candidate.
class RecallMatch {
 public:
  /// Strict matching needs the exact reference sign pattern. Otherwise any output within
  /// `noise_floor` overlap distance of the reference or of a group member is accepted.
  RecallMatch(SpinConfig reference, std::vector<SpinConfig> group = {}, double noise_floor = 0.21,
              bool strict = false);
  explicit RecallMatch(const Candidate& c, double noise_floor = 0.21, bool strict = false)
      : RecallMatch(c.reference, c.group, noise_floor, strict) {}

  const SpinConfig& reference() const noexcept { return reference_; }
  bool operator()(const SpinConfig& output) const;

 private:
  SpinConfig reference_;
  std::vector<SpinConfig> group_;
  double noise_floor_;
  bool strict_;
};

struct RecallTrial {
  std::size_t errors = 0;
  bool success = false;
};

/// One oracle call with `errors` distinct sites of the reference flipped.
RecallTrial recall_trial(const NetworkOracle& oracle, const RecallMatch& match, std::size_t errors,
                         RandomSource& rng);

struct Screening {
  bool pass = false;
  double p0 = 0.0;
  std::vector<RecallTrial> trials;
};

Screening screen_candidate(const NetworkOracle& oracle, const RecallMatch& match, RandomSource& rng,
                           std::size_t trials = 30, double pass_threshold = 0.75);

/// a1 [1 - tanh(a2 e - a3)].
struct TanhFit {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double sse = 0.0;

  double operator()(double e) const;
};

/// Error count where the fitted curve equals `threshold`, clamped to [0, max_errors].
/// Returns 0 when the curve never reaches the threshold (2 a1 <= threshold) or decreases nowhere.
double tanh_crossing(const TanhFit& fit, double threshold, double max_errors);

struct RecallPoint {
  std::size_t errors = 0;
  double p = 0.0;
  std::size_t trials = 0;
};

std::vector<RecallPoint> aggregate(std::span<const RecallTrial> trials);

/// Weighted least squares tanh fit (Levenberg-Marquardt, multistart over a3 in 0..n/2,
/// simplex fallback). Empty when fewer than three error levels are present or no start converges.
std::optional<TanhFit> fit_tanh(std::span<const RecallPoint> points, std::size_t n);

/// Crossing of the isotonic (non-increasing) interpolation of the points.
double interpolated_crossing(std::span<const RecallPoint> points, double threshold);

struct BasinOptions {
  std::size_t p0_trials = 30;
  std::size_t adaptive_trials = 30;
  double threshold = 0.5;
  std::size_t bootstrap = 100;
  double sampling_width = 1.5;
  double default_err = 0.3;
};

struct RecallCurve {
  std::vector<RecallPoint> points;
  std::vector<RecallTrial> trials;
  std::optional<TanhFit> fit;
  std::vector<double> residuals;  // per point, p - fit
  double basin = 0.0;
  double basin_err = 0.0;
  bool interpolated = false;  // fit failed; basin from interpolation
};

/// Adaptive basin measurement. `zero_error` trials (for example from screening) are reused;
/// missing zero-error trials up to p0_trials are run first.
RecallCurve estimate_basin(const NetworkOracle& oracle, const RecallMatch& match, RandomSource& rng,
                           const BasinOptions& opts = {}, std::span<const RecallTrial> zero_error = {});

/// Basin from a finished set of trials (fit, crossing, bootstrap error).
RecallCurve analyze_recall(std::vector<RecallTrial> trials, std::size_t n, double threshold, RandomSource& rng,
                           std::size_t bootstrap = 100, double default_err = 0.3);

struct VolumeEstimate {
  double volume = 0.0;
  double err = 0.0;
};

/// 2^n N_i / N_total with a bootstrap error over resampled attractor lists.
VolumeEstimate basin_volume(std::size_t hits, std::size_t total, std::size_t n, RandomSource& rng,
                            std::size_t reps = 1000);

/// Average volume available per memory, 2^n / capacity.
double volume_bound(std::size_t n, double capacity);

struct SamplesCurve {
  std::vector<std::size_t> sizes;
  std::vector<double> found;  // mean distinct memories per subsample size
  stats::LineFit fit;         // found against 1 / size
  double intercept = 0.0;
  double fraction_found = 0.0;
};

/// `labels` holds the memory index of each sample or -1. Subsample sizes run from a quarter
/// of the list to all of it in eighths.
SamplesCurve capacity_vs_samples(std::span<const long> labels, RandomSource& rng, std::size_t reps = 500);

struct PipelineOptions {
  std::size_t samples = 0;  // 0 selects default_sample_count(n)
  double cut = 1.0;
  double noise_floor = 0.21;
  Linkage linkage = Linkage::Average;
  std::size_t screen_trials = 30;
  double pass_threshold = 0.75;
  BasinOptions basin;
  std::size_t capacity_bootstrap = 1000;
  std::size_t samples_bootstrap = 500;
  bool strict_match = false;
  /// For deterministic oracles, decide memories by exact single-flip recall over all n sites.
  bool exact_single_flip = true;
  unsigned threads = 0;
};

struct MemoryRecord {
  std::size_t candidate = 0;
  SpinConfig reference;
  double p0 = 0.0;
  bool screened = false;
  RecallCurve curve;
  std::optional<double> exact_recall;  // single-flip recall over all sites
  bool is_memory = false;
  VolumeEstimate volume;
};

struct PipelineReport {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  PipelineOptions options;
  std::vector<SpinConfig> samples;
  std::vector<Candidate> candidates;
  std::vector<MemoryRecord> records;  // one per candidate
  std::size_t capacity = 0;           // memories with basin >= 1
  double capacity_mean = 0.0;         // bootstrap mean
  double capacity_std = 0.0;
  double volume_bound = 0.0;
  SamplesCurve samples_curve;

  std::vector<SpinConfig> memories() const;
};

/// Sampling, clustering, screening, basin estimation, bootstrap capacity and volumes.
PipelineReport capacity(const NetworkOracle& oracle, const RandomSource& rng, const PipelineOptions& opts = {});

std::string report_json(const PipelineReport& report);
/// Columns: candidate, errors, success.
void write_recall_trials_csv(std::ostream& out, const PipelineReport& report);

}  // namespace glassmem
