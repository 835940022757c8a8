#pragma once

#include <cstddef>
#include <vector>

#include "glassmem/dynamics.hpp"
#include "glassmem/random.hpp"
#include "glassmem/spin.hpp"
#include "glassmem/stats.hpp"

namespace glassmem {

/// P >= 1 binary patterns of a common length n.
class PatternSet {
 public:
  explicit PatternSet(std::vector<SpinConfig> patterns);

  /// P patterns drawn uniformly with replacement (duplicates allowed).
  static PatternSet random(std::size_t n, std::size_t P, RandomSource& rng);

  std::size_t size() const noexcept { return patterns_.size(); }
  std::size_t length() const noexcept { return patterns_.front().size(); }
  const SpinConfig& operator[](std::size_t p) const { return patterns_[p]; }
  const std::vector<SpinConfig>& patterns() const noexcept { return patterns_; }

 private:
  std::vector<SpinConfig> patterns_;
};

/// J_ij = sum_p xi_i^p xi_j^p off the diagonal, zero diagonal.
CouplingMatrix hebbian(const PatternSet& patterns);

struct HopfieldOptions {
  std::size_t trials = 100;
  double threshold = 0.5;
  DynamicsKind kind = DynamicsKind::mh();
};

/// Number of distinct patterns whose single-flip recall probability exceeds the threshold.
std::size_t stored_memory_count(const PatternSet& patterns, RandomSource& rng, const HopfieldOptions& opts = {});

struct CapacityRow {
  std::size_t n = 0;
  std::size_t P = 0;
  double mean = 0.0;
  double std = 0.0;
  std::size_t realizations = 0;
};

struct CapacitySweep {
  std::vector<CapacityRow> rows;
  std::size_t argmax_P = 0;
  double max_mean = 0.0;
};

/// Stored-memory statistics for each P over independent pattern sets. Realization r of
/// pattern count P uses the stream rng.split(P, r), so results do not depend on `threads`.
CapacitySweep capacity_sweep(std::size_t n, const std::vector<std::size_t>& P_range, std::size_t realizations,
                             const RandomSource& rng, const HopfieldOptions& opts = {}, std::size_t threads = 1);

struct ScalingPoint {
  std::size_t n = 0;
  std::size_t argmax_P = 0;
  double max_mean = 0.0;
};

struct ScalingResult {
  std::vector<ScalingPoint> points;
  stats::LineFit fit;
};

/// Maximum mean capacity for each n (P swept over `P_range`), fitted linearly in n.
ScalingResult capacity_scaling(const std::vector<std::size_t>& ns, const std::vector<std::size_t>& P_range,
                               std::size_t realizations, const RandomSource& rng, const HopfieldOptions& opts = {},
                               std::size_t threads = 1);

}  // namespace glassmem
