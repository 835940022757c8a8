#include "glassmem/network_sim.hpp"

#include "glassmem/error.hpp"

namespace glassmem {

SemiclassicalOracle::SemiclassicalOracle(SitePlan plan, SimParams params, NoiseModel noise)
    : plan_(std::move(plan)), params_(params), noise_(noise) {
  params_.validate();
  noise_.validate();
}

SpinConfig SemiclassicalOracle::recall(const SpinConfig& stimulus, RandomSource& rng) const {
  return run_recall_trial(plan_, stimulus, params_, noise_, rng).signs;
}

std::string to_string(Elasticity e) {
  switch (e) {
    case Elasticity::Strong:
      return "strong";
    case Elasticity::Default:
      return "default";
    case Elasticity::Weak:
      return "weak";
  }
  return "default";
}

Elasticity parse_elasticity(std::string_view text) {
  if (text == "strong") return Elasticity::Strong;
  if (text == "default") return Elasticity::Default;
  if (text == "weak") return Elasticity::Weak;
  throw ValidationError("unknown elasticity '" + std::string(text) + "'");
}

SimParams with_elasticity(SimParams params, Elasticity e) {
  switch (e) {
    case Elasticity::Strong:
      params.elastic = false;
      break;
    case Elasticity::Default:
      break;
    case Elasticity::Weak:
      params.trap_energy /= 4.0;
      break;
  }
  return params;
}

std::optional<SpinConfig> find_correctable_memory(const SitePlan& plan, const SimParams& params,
                                                  std::span<const std::size_t> flips, const RandomSource& rng,
                                                  std::size_t attempts) {
  for (const auto i : flips)
    if (i >= plan.size()) throw ValidationError("flip site outside the plan");
  const auto none = NoiseModel::none();
  for (std::size_t k = 0; k < attempts; ++k) {
    RandomSource r = rng.split(k);
    const auto m = run_recall_trial(plan, SpinConfig::random_binary(plan.size(), r), params, none, r).signs;
    if (run_recall_trial(plan, m, params, none, r).signs != m) continue;
    if (run_recall_trial(plan, flip_sites(m, flips), params, none, r).signs == m) return m;
  }
  return std::nullopt;
}

PipelineReport network_capacity_sim(const SitePlan& plan, const SimParams& params, const NoiseModel& noise,
                                    const RandomSource& rng, const PipelineOptions& opts) {
  return capacity(SemiclassicalOracle(plan, params, noise), rng, opts);
}

}  // namespace glassmem
