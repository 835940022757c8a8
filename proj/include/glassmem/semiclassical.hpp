#pragma once

#include <cstddef>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

#include "glassmem/cavity.hpp"
#include "glassmem/geometry.hpp"
#include "glassmem/random.hpp"
#include "glassmem/spin.hpp"

namespace glassmem {

/// Spin length per site.
inline constexpr double kSpinLength = 0.5;

/// Pump schedules of a recall trial (times in ms).
struct Schedule {
  double stimulus_on = 1.6;    // end of the cosine ramp up
  double stimulus_hold = 5.0;  // start of the cosine ramp down
  double stimulus_off = 7.0;
  double t_end = 8.0;
  double pump_final = 4.0;  // g / g_c at t_end
  double pump_tau = 2.0;    // time constant of the exponential ramp

  /// g(t) / g_c.
  double pump(double t) const;
  /// Stimulus envelope in [0, 1].
  double stimulus(double t) const;
  void validate() const;
};

struct SimParams {
  double omega_z = 2.0 * std::numbers::pi * 7.5;  // rad/ms
  Schedule schedule;
  double stimulus_amplitude = 0.5;  // self field at a stimulated site, in units of omega_z
  double damping = 500.0;           // c_d in units of hbar / um^2
  double atoms_per_site = 4.2e4;    // scales the optical force on each ensemble
  double trap_energy = 981.5;       // E_trap, rad/ms; calibrated to 1.32 um on J_1
  double trap_waist = 20.0;         // w_t, um
  bool elastic = true;              // false freezes positions at the trap centres
  double seed_scale = 1e-4;         // transverse seed, in units of the spin length
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double lazy_threshold = 0.0;      // um; 0 re-evaluates couplings at every call
  std::size_t max_steps = 2'000'000;  // accepted plus rejected steps per trial
  CavityParams cavity;

  /// Position mobility (atoms_per_site / damping).
  double mobility() const { return atoms_per_site / damping; }
  void validate() const;
};

struct NoiseModel {
  double trap_sigma = 0.5;   // um
  double amp_sigma = 0.1;    // relative
  double phase_sigma = 0.3;  // rad
  bool trap = false;
  bool stimulus = false;  // per-site amplitude and phase plus a uniform global phase

  static NoiseModel none() { return {}; }
  static NoiseModel both() { return with(true, true); }
  static NoiseModel with(bool trap, bool stimulus);
  void validate() const;
};

/// One draw of the experimental imperfections plus the symmetry-breaking seed.
struct TrialSetup {
  std::vector<Vec2> traps;
  std::vector<double> amplitudes;
  std::vector<double> phases;
  double global_phase = 0.0;
  std::vector<double> seed;  // initial Sx per site

  std::size_t size() const noexcept { return traps.size(); }
};

TrialSetup draw_trial_setup(const SitePlan& plan, const NoiseModel& noise, const SimParams& params,
                            RandomSource& rng);

/// Bloch vectors, positions and trap centres of every ensemble.
///
/// Storage is the integrator state: [Sx..., Sy..., Sz..., x..., y...].
class NetworkState {
 public:
  explicit NetworkState(std::vector<Vec2> traps);

  /// Sz = -S, Sx = Sy = 0, positions at the traps.
  static NetworkState normal(std::vector<Vec2> traps);

  std::size_t size() const noexcept { return traps_.size(); }
  double sx(std::size_t i) const { return x_[i]; }
  double sy(std::size_t i) const { return x_[size() + i]; }
  double sz(std::size_t i) const { return x_[2 * size() + i]; }
  Vec2 position(std::size_t i) const { return {x_[3 * size() + i], x_[4 * size() + i]}; }
  std::span<const Vec2> traps() const noexcept { return traps_; }

  void set_spin(std::size_t i, double sx, double sy, double sz);
  void set_position(std::size_t i, Vec2 r);

  double spin_length(std::size_t i) const;
  std::vector<Vec2> positions() const;
  SpinConfig sx_signs() const;

  std::vector<double>& data() noexcept { return x_; }
  const std::vector<double>& data() const noexcept { return x_; }

 private:
  std::vector<Vec2> traps_;
  std::vector<double> x_;
};

/// Terms of the semiclassical energy, in rad/ms.
struct EnergyTerms {
  double transverse = 0.0;
  double ising = 0.0;
  double stimulus = 0.0;
  double trap = 0.0;

  double total() const { return transverse + ising + stimulus + trap; }
  /// The same terms divided by the spin length.
  EnergyTerms per_spin_length() const;
};

/// Couplings, stimulus and schedules of one trial; evaluates energies and derivatives.
///
/// Not thread-safe: evaluation reuses internal scratch buffers.
class RecallModel {
 public:
  RecallModel(const SitePlan& plan, const SpinConfig& stimulus_signs, const SimParams& params,
              const TrialSetup& setup);

  const SimParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return centers_.size(); }
  /// Critical pump strength from the largest eigenvalue at the nominal trap centres.
  double g_critical() const noexcept { return g_c_; }
  /// Stimulus scale such that amp * mean self coupling = stimulus_amplitude * omega_z.
  double stimulus_scale() const noexcept { return amp_; }
  double g(double t) const { return g_c_ * params_.schedule.pump(t); }

  /// f(r) at full stimulus envelope.
  double stimulus_field(Vec2 r) const;

  EnergyTerms energy(const NetworkState& state, double t) const;
  /// dE/dr_i for every site.
  std::vector<Vec2> position_gradient(const NetworkState& state, double t);
  void rhs(const std::vector<double>& x, std::vector<double>& dxdt, double t);

 private:
  void refresh(std::span<const Vec2> positions, bool stimulus);
  /// dE/dr at the cached positions `pos_`.
  Vec2 site_gradient(std::size_t i, const double* sx, double gt, double fe) const;

  SimParams params_;
  CouplingKernel kernel_;
  std::vector<Vec2> centers_;  // stimulus beam targets
  std::vector<Vec2> traps_;
  std::vector<double> weights_;
  double g_c_ = 0.0;
  double amp_ = 0.0;

  std::vector<Vec2> cached_;
  bool have_cache_ = false;
  std::vector<double> J_;
  std::vector<Vec2> dJ_;
  bool stimulus_cached_ = false;
  std::vector<double> f_;  // stimulus at the cached positions, before the envelope
  std::vector<Vec2> df_;
  std::vector<Vec2> pos_;
};

EnergyTerms total_energy(const NetworkState& state, double t, const SitePlan& plan, const SpinConfig& signs,
                         const SimParams& params, const TrialSetup& setup);

std::vector<double> eom_rhs(const NetworkState& state, double t, const SitePlan& plan, const SpinConfig& signs,
                            const SimParams& params, const TrialSetup& setup);

struct TrajectorySample {
  double t = 0.0;
  std::vector<double> state;
  EnergyTerms energy;
};

struct TrialResult {
  SpinConfig signs;
  std::vector<Vec2> positions;
  std::vector<Vec2> traps;
  EnergyTerms final_energy;
  double max_spin_length_error = 0.0;
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::vector<TrajectorySample> trajectory;

  /// Mean |r_i - r_i^0| at the end of the trial.
  double mean_deviation() const;
};

/// Integrates one trial from the normal state with the given setup.
/// Throws IntegrationError when the step size collapses.
TrialResult run_trial(const SitePlan& plan, const SpinConfig& stimulus_signs, const SimParams& params,
                      const TrialSetup& setup, bool record = false);

/// Draws a setup from `noise` and runs the trial.
TrialResult run_recall_trial(const SitePlan& plan, const SpinConfig& stimulus_signs, const SimParams& params,
                             const NoiseModel& noise, RandomSource& rng, bool record = false);

/// Columns: t, sx_i, sy_i, sz_i, x_i, y_i, then the four energy terms per spin length.
void write_trial_trajectory_csv(std::ostream& out, const TrialResult& result);

struct TrapCalibration {
  double trap_energy = 0.0;
  double deviation = 0.0;
  int evaluations = 0;
};

/// Mean end-of-trial deviation over `trials` noise-free trials with random stimuli.
double mean_trap_deviation(const SitePlan& plan, const SimParams& params, std::size_t trials,
                           const RandomSource& rng, unsigned threads = 0);

/// Bisects E_trap (geometrically) until the mean deviation is within `rel_tol` of `target`.
/// Throws ConvergenceError when no bracket is found.
TrapCalibration calibrate_trap_energy(const SitePlan& plan, const SimParams& params, double target,
                                      const RandomSource& rng, std::size_t trials = 20, double rel_tol = 0.02,
                                      unsigned threads = 0);

}  // namespace glassmem
