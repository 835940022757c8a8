#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glassmem/random.hpp"
#include "glassmem/spin.hpp"

namespace glassmem {

enum class DynamicsVariant {
  MH,      ///< zero-temperature Metropolis: every energy-lowering flip equally likely
  SD,      ///< greedy steepest descent: flip the most energy-lowering spin
  SDRate,  ///< lowering flips chosen with probability proportional to the energy released
};

enum class TieBreak { Uniform, LowestIndex };

struct DynamicsKind {
  DynamicsVariant variant = DynamicsVariant::SD;
  TieBreak tie_break = TieBreak::Uniform;

  static DynamicsKind mh() { return {DynamicsVariant::MH, TieBreak::Uniform}; }
  static DynamicsKind sd(TieBreak tb = TieBreak::Uniform) { return {DynamicsVariant::SD, tb}; }
  static DynamicsKind sd_rate() { return {DynamicsVariant::SDRate, TieBreak::Uniform}; }

  /// True when relax() never consumes randomness for this kind.
  bool deterministic() const noexcept {
    return variant == DynamicsVariant::SD && tie_break == TieBreak::LowestIndex;
  }

  friend bool operator==(const DynamicsKind&, const DynamicsKind&) = default;
};

/// "MH", "SD", "SD_RATE", optionally suffixed with "/lowest" for lowest-index tie-break.
std::string to_string(DynamicsKind kind);
DynamicsKind parse_dynamics_kind(std::string_view text);

enum class RecallScoring {
  Exact,         ///< final sign pattern must equal the memory
  TwinTolerant,  ///< the globally flipped memory also counts
};

struct TrajectoryStep {
  std::size_t step;
  std::size_t site;
  double delta_energy;
  double energy;
};

/// CSV with header `step,site,delta_energy,energy`.
void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryStep> steps);

/// Binary spins together with their local fields h_k = sum_{j != k} J_kj s_j,
/// updated in O(n) per flip.
class LocalFieldState {
 public:
  explicit LocalFieldState(const CouplingMatrix& J);

  void assign(std::span<const double> spins);
  void flip(std::size_t k);

  double delta(std::size_t k) const noexcept { return 2.0 * s_[k] * h_[k]; }
  std::size_t size() const noexcept { return s_.size(); }
  std::span<const double> spins() const noexcept { return s_; }
  std::span<const double> fields() const noexcept { return h_; }
  bool is_local_min() const noexcept;
  bool same_spins(const SpinConfig& other) const noexcept;
  bool same_spins_negated(const SpinConfig& other) const noexcept;
  std::uint64_t bits() const noexcept;

 private:
  const CouplingMatrix* J_;
  std::vector<double> s_;
  std::vector<double> h_;
};

/// Runs `kind` on `state` in place until no single flip lowers the energy.
/// Returns the number of flips performed.
std::size_t relax_in_place(LocalFieldState& state, DynamicsKind kind, RandomSource& rng,
                           std::vector<TrajectoryStep>* trajectory = nullptr);

/// Relaxes a binary configuration to a local minimum. Energy strictly decreases at every flip.
SpinConfig relax(const CouplingMatrix& J, const SpinConfig& s0, DynamicsKind kind, RandomSource& rng,
                 std::vector<TrajectoryStep>* trajectory = nullptr);

/// True iff no single flip strictly lowers the energy (zero-cost flips allowed).
bool is_local_min(const CouplingMatrix& J, const SpinConfig& s);

inline constexpr std::size_t kMaxExhaustiveSize = 24;

/// Every binary local minimum, canonicalized (first entry +1) and sorted by bit pattern.
/// Throws ValidationError for n > kMaxExhaustiveSize.
std::vector<SpinConfig> enumerate_minima(const CouplingMatrix& J);

/// Distinct canonical minima reached from `starts` uniformly random initial states.
std::vector<SpinConfig> enumerate_minima_restart(const CouplingMatrix& J, std::size_t starts, DynamicsKind kind,
                                                 RandomSource& rng);

/// Fraction of `trials` corrupted-and-relaxed copies of `memory` that return to it.
double recall_probability(const CouplingMatrix& J, const SpinConfig& memory, std::size_t errors, std::size_t trials,
                          DynamicsKind kind, RandomSource& rng, RecallScoring scoring = RecallScoring::Exact);

/// Exact single-flip recall probability: the average over all n corrupted sites of the
/// probability that `kind` relaxes back, computed by exhaustive expansion of the descent
/// tree with memoization. Returns nullopt if more than `max_states` distinct states would
/// be visited. Requires n <= 64.
std::optional<double> exact_single_flip_recall(const CouplingMatrix& J, const SpinConfig& memory, DynamicsKind kind,
                                               RecallScoring scoring = RecallScoring::Exact,
                                               std::size_t max_states = 1U << 20);

}  // namespace glassmem
