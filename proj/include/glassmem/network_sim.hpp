#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "glassmem/pipeline.hpp"
#include "glassmem/semiclassical.hpp"

namespace glassmem {

/// Each recall is one semiclassical trial with a fresh noise draw.
class SemiclassicalOracle final : public NetworkOracle {
 public:
  SemiclassicalOracle(SitePlan plan, SimParams params, NoiseModel noise);

  std::size_t size() const override { return plan_.size(); }
  SpinConfig recall(const SpinConfig& stimulus, RandomSource& rng) const override;

  const SitePlan& plan() const noexcept { return plan_; }
  const SimParams& params() const noexcept { return params_; }
  const NoiseModel& noise() const noexcept { return noise_; }

 private:
  SitePlan plan_;
  SimParams params_;
  NoiseModel noise_;
};

/// Trap strength rows: no elasticity (frozen positions), the calibrated default, and a
/// four times weaker trap.
enum class Elasticity { Strong, Default, Weak };

std::string to_string(Elasticity e);
Elasticity parse_elasticity(std::string_view text);

/// `params` with the trap adjusted for `e`, taking params.trap_energy as the default strength.
SimParams with_elasticity(SimParams params, Elasticity e);

/// Searches random stimuli for a noise-free fixed point `m` (recall of m returns m) that is
/// also recalled when exactly the sites in `flips` are corrupted. Attempt k uses rng.split(k).
std::optional<SpinConfig> find_correctable_memory(const SitePlan& plan, const SimParams& params,
                                                  std::span<const std::size_t> flips, const RandomSource& rng,
                                                  std::size_t attempts);

/// Memory pipeline run against the semiclassical oracle.
PipelineReport network_capacity_sim(const SitePlan& plan, const SimParams& params, const NoiseModel& noise,
                                    const RandomSource& rng, const PipelineOptions& opts = {});

}  // namespace glassmem
