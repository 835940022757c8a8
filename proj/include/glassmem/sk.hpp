#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "glassmem/dynamics.hpp"
#include "glassmem/random.hpp"
#include "glassmem/spin.hpp"

namespace glassmem {

struct SKRealization {
  CouplingMatrix J;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

/// Symmetric matrix with iid N(0, 1) off-diagonal entries and zero diagonal.
SKRealization sample_sk(std::size_t n, RandomSource& rng);

struct SKOptions {
  DynamicsKind kind = DynamicsKind::sd();
  double threshold = 0.5;
  /// Minima are enumerated exhaustively up to this size, by random restarts above it.
  std::size_t exhaustive_limit = 20;
  std::size_t starts = 54000;
  /// Recall trials per minimum when the exact single-flip recall is unavailable.
  std::size_t trials = 200;
  RecallScoring scoring = RecallScoring::Exact;
};

/// One realization's memories: canonical minima whose single-flip recall beats the threshold.
struct SKAnalysis {
  std::vector<SpinConfig> minima;
  std::vector<double> recall;  // per minimum
  std::size_t memories = 0;

  double fraction() const { return minima.empty() ? 0.0 : static_cast<double>(memories) / minima.size(); }
};

/// Recall probability is computed exactly (no sampling) when the descent tree is small
/// enough, otherwise estimated from `opts.trials` corrupted copies.
SKAnalysis analyze_realization(const CouplingMatrix& J, const SKOptions& opts, RandomSource& rng);

struct SKSummary {
  std::size_t n = 0;
  std::size_t realizations = 0;
  double capacity_mean = 0.0;
  double capacity_std = 0.0;
  double capacity_stderr = 0.0;
  double fraction_mean = 0.0;
  double fraction_stderr = 0.0;
  double minima_mean = 0.0;
};

/// Capacity and memory fraction over independent realizations. Realization r draws J from
/// rng.split(n, r), so results are identical for any thread count.
SKSummary sk_statistics(std::size_t n, std::size_t realizations, const RandomSource& rng, const SKOptions& opts = {},
                        std::size_t threads = 1);

struct MeanErr {
  double mean = 0.0;
  double err = 0.0;
};

/// Mean fraction of minima that are memories, with its standard error.
MeanErr memory_fraction(std::size_t n, std::size_t realizations, const RandomSource& rng, const SKOptions& opts = {},
                        std::size_t threads = 1);

/// Mean memory count and its disorder standard deviation.
MeanErr sk_capacity(std::size_t n, std::size_t realizations, const RandomSource& rng, const SKOptions& opts = {},
                    std::size_t threads = 1);

}  // namespace glassmem
