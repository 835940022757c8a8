#include "glassmem/semiclassical.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <ostream>
#include <string>

#include "glassmem/error.hpp"
#include "glassmem/io.hpp"
#include "glassmem/parallel.hpp"

namespace glassmem {

namespace odeint = boost::numeric::odeint;

double Schedule::pump(double t) const {
  const double u = std::clamp(t, 0.0, t_end);
  return pump_final * std::expm1(u / pump_tau) / std::expm1(t_end / pump_tau);
}

double Schedule::stimulus(double t) const {
  if (t <= 0.0 || t >= stimulus_off) return 0.0;
  if (t < stimulus_on) return 0.5 * (1.0 - std::cos(std::numbers::pi * t / stimulus_on));
  if (t <= stimulus_hold) return 1.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (t - stimulus_hold) / (stimulus_off - stimulus_hold)));
}

void Schedule::validate() const {
  if (!(stimulus_on > 0.0 && stimulus_on <= stimulus_hold && stimulus_hold < stimulus_off && stimulus_off <= t_end))
    throw ValidationError("stimulus ramp times must satisfy 0 < on <= hold < off <= t_end");
  if (!(pump_final >= 0.0) || !(pump_tau > 0.0)) throw ValidationError("pump ramp needs final >= 0 and tau > 0");
}

void SimParams::validate() const {
  schedule.validate();
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(name) + " must be positive");
  };
  positive(omega_z, "omega_z");
  positive(damping, "damping");
  positive(atoms_per_site, "atoms_per_site");
  positive(trap_energy, "trap_energy");
  positive(trap_waist, "trap_waist");
  positive(rel_tol, "rel_tol");
  positive(abs_tol, "abs_tol");
  if (!(stimulus_amplitude >= 0.0)) throw ValidationError("stimulus_amplitude must be non-negative");
  if (!(seed_scale >= 0.0 && seed_scale < 1.0)) throw ValidationError("seed_scale must lie in [0, 1)");
  if (!(lazy_threshold >= 0.0)) throw ValidationError("lazy_threshold must be non-negative");
  if (max_steps == 0) throw ValidationError("max_steps must be positive");
}

NoiseModel NoiseModel::with(bool trap, bool stimulus) {
  NoiseModel m;
  m.trap = trap;
  m.stimulus = stimulus;
  return m;
}

void NoiseModel::validate() const {
  if (!(trap_sigma >= 0.0 && amp_sigma >= 0.0 && phase_sigma >= 0.0))
    throw ValidationError("noise standard deviations must be non-negative");
}

TrialSetup draw_trial_setup(const SitePlan& plan, const NoiseModel& noise, const SimParams& params,
                            RandomSource& rng) {
  noise.validate();
  const std::size_t n = plan.size();
  // Independent child streams keep the seed draw unchanged when a noise channel is toggled.
  const RandomSource base(rng.engine()());
  RandomSource trap_rng = base.split(1);
  RandomSource stim_rng = base.split(2);
  RandomSource seed_rng = base.split(3);

  TrialSetup s;
  s.traps.assign(plan.sites().begin(), plan.sites().end());
  s.amplitudes.assign(n, 1.0);
  s.phases.assign(n, 0.0);
  s.seed.resize(n);
  if (noise.trap) {
    for (auto& r : s.traps) r = r + Vec2{trap_rng.normal(0.0, noise.trap_sigma), trap_rng.normal(0.0, noise.trap_sigma)};
  }
  if (noise.stimulus) {
    for (std::size_t i = 0; i < n; ++i) {
      s.amplitudes[i] = stim_rng.normal(1.0, noise.amp_sigma);
      s.phases[i] = stim_rng.normal(0.0, noise.phase_sigma);
    }
    s.global_phase = stim_rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  for (auto& v : s.seed) v = seed_rng.sign() * params.seed_scale * kSpinLength;
  return s;
}

NetworkState::NetworkState(std::vector<Vec2> traps) : traps_(std::move(traps)), x_(5 * traps_.size(), 0.0) {
  if (traps_.empty()) throw ValidationError("network state needs at least one site");
  for (std::size_t i = 0; i < size(); ++i) set_position(i, traps_[i]);
}

NetworkState NetworkState::normal(std::vector<Vec2> traps) {
  NetworkState s(std::move(traps));
  for (std::size_t i = 0; i < s.size(); ++i) s.set_spin(i, 0.0, 0.0, -kSpinLength);
  return s;
}

void NetworkState::set_spin(std::size_t i, double sx, double sy, double sz) {
  const std::size_t n = size();
  x_.at(i) = sx;
  x_[n + i] = sy;
  x_[2 * n + i] = sz;
}

void NetworkState::set_position(std::size_t i, Vec2 r) {
  const std::size_t n = size();
  x_.at(3 * n + i) = r.x;
  x_[4 * n + i] = r.y;
}

double NetworkState::spin_length(std::size_t i) const { return std::hypot(sx(i), sy(i), sz(i)); }

std::vector<Vec2> NetworkState::positions() const {
  std::vector<Vec2> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = position(i);
  return out;
}

SpinConfig NetworkState::sx_signs() const {
  std::vector<double> v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = sx(i) < 0.0 ? -1.0 : 1.0;
  return SpinConfig(std::move(v));
}

EnergyTerms EnergyTerms::per_spin_length() const {
  return {transverse / kSpinLength, ising / kSpinLength, stimulus / kSpinLength, trap / kSpinLength};
}

RecallModel::RecallModel(const SitePlan& plan, const SpinConfig& stimulus_signs, const SimParams& params,
                         const TrialSetup& setup)
    : params_(params),
      kernel_(params.cavity),
      centers_(plan.sites().begin(), plan.sites().end()),
      traps_(setup.traps) {
  params_.validate();
  const std::size_t n = plan.size();
  if (stimulus_signs.size() != n || setup.size() != n || setup.amplitudes.size() != n || setup.phases.size() != n ||
      setup.seed.size() != n)
    throw SizeError("plan, stimulus and trial setup sizes differ");
  if (!stimulus_signs.is_binary()) throw ValidationError("stimulus must be a binary configuration");

  weights_.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    weights_[i] = stimulus_signs[i] * setup.amplitudes[i] * std::cos(setup.global_phase + setup.phases[i]);

  std::vector<double> J0;
  kernel_.assemble(centers_, J0);
  const double lambda = largest_eigenvalue(CouplingMatrix(n, J0, DiagonalPolicy::Retained));
  if (!(lambda > 0.0)) throw DomainError("coupling matrix has no positive eigenvalue");
  const auto& cav = params_.cavity;
  const double detuning = 1.0 + cav.kappa() * cav.kappa() / (cav.delta_C() * cav.delta_C());
  g_c_ = params_.omega_z * detuning / (2.0 * kSpinLength * lambda);

  double diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag += J0[i * n + i];
  amp_ = params_.stimulus_amplitude * params_.omega_z / (diag / static_cast<double>(n));
}

double RecallModel::stimulus_field(Vec2 r) const {
  double f = 0.0;
  for (std::size_t j = 0; j < centers_.size(); ++j) f += weights_[j] * kernel_.value(r, centers_[j]);
  return amp_ * f;
}

void RecallModel::refresh(std::span<const Vec2> positions, bool stimulus) {
  bool same = have_cache_;
  for (std::size_t i = 0; i < positions.size() && same; ++i) {
    const Vec2 d = positions[i] - cached_[i];
    same = params_.lazy_threshold > 0.0 ? norm(d) < params_.lazy_threshold : (d.x == 0.0 && d.y == 0.0);
  }
  if (!same) {
    kernel_.assemble(positions, J_, &dJ_);
    cached_.assign(positions.begin(), positions.end());
    have_cache_ = true;
    stimulus_cached_ = false;
  }
  if (stimulus && !stimulus_cached_) {
    kernel_.superpose(cached_, centers_, weights_, f_, &df_);
    stimulus_cached_ = true;
  }
}

EnergyTerms RecallModel::energy(const NetworkState& state, double t) const {
  const std::size_t n = size();
  if (state.size() != n) throw SizeError("state size differs from the model");
  const auto pos = state.positions();
  std::vector<double> J;
  std::vector<double> f0;
  kernel_.assemble(pos, J);
  kernel_.superpose(pos, centers_, weights_, f0);
  const double gt = g(t);
  const double fe = params_.schedule.stimulus(t) * amp_;
  const double w2 = params_.trap_waist * params_.trap_waist;

  EnergyTerms e;
  for (std::size_t i = 0; i < n; ++i) {
    e.transverse += params_.omega_z * state.sz(i);
    double h = 0.0;
    for (std::size_t j = 0; j < n; ++j) h += J[i * n + j] * state.sx(j);
    e.ising -= gt * state.sx(i) * h;
    e.stimulus -= fe * f0[i] * state.sx(i);
    e.trap += 0.5 * params_.trap_energy * norm2(state.position(i) - state.traps()[i]) / w2;
  }
  return e;
}

Vec2 RecallModel::site_gradient(std::size_t i, const double* sx, double gt, double fe) const {
  const std::size_t n = size();
  Vec2 gi = (sx[i] * sx[i]) * dJ_[i * n + i];
  for (std::size_t k = 0; k < n; ++k)
    if (k != i) gi += (2.0 * sx[i] * sx[k]) * dJ_[i * n + k];
  const Vec2 gf = fe != 0.0 ? df_[i] : Vec2{};
  const double w2 = params_.trap_waist * params_.trap_waist;
  return (-gt) * gi + (-fe * sx[i]) * gf + (params_.trap_energy / w2) * (pos_[i] - traps_[i]);
}

std::vector<Vec2> RecallModel::position_gradient(const NetworkState& state, double t) {
  const std::size_t n = size();
  if (state.size() != n) throw SizeError("state size differs from the model");
  pos_ = state.positions();
  const double gt = g(t);
  const double fe = params_.schedule.stimulus(t) * amp_;
  refresh(pos_, fe != 0.0);
  std::vector<Vec2> grad(n);
  for (std::size_t i = 0; i < n; ++i) grad[i] = site_gradient(i, state.data().data(), gt, fe);
  return grad;
}

void RecallModel::rhs(const std::vector<double>& x, std::vector<double>& dxdt, double t) {
  const std::size_t n = size();
  dxdt.resize(5 * n);
  pos_.resize(n);
  for (std::size_t i = 0; i < n; ++i) pos_[i] = {x[3 * n + i], x[4 * n + i]};
  const double gt = g(t);
  const double fe = params_.schedule.stimulus(t) * amp_;
  refresh(pos_, fe != 0.0);

  const double* sx = x.data();
  const double* sy = sx + n;
  const double* sz = sy + n;
  const double wz = params_.omega_z;
  const double mob = params_.mobility();

  for (std::size_t i = 0; i < n; ++i) {
    double h = 0.0;
    for (std::size_t j = 0; j < n; ++j) h += J_[i * n + j] * sx[j];
    // Effective longitudinal field -dE/dSx.
    const double b = (fe != 0.0 ? fe * f_[i] : 0.0) + 2.0 * gt * h;
    dxdt[i] = -wz * sy[i];
    dxdt[n + i] = wz * sx[i] + b * sz[i];
    dxdt[2 * n + i] = -b * sy[i];
    if (params_.elastic) {
      const Vec2 grad = site_gradient(i, sx, gt, fe);
      dxdt[3 * n + i] = -mob * grad.x;
      dxdt[4 * n + i] = -mob * grad.y;
    } else {
      dxdt[3 * n + i] = 0.0;
      dxdt[4 * n + i] = 0.0;
    }
  }
}

EnergyTerms total_energy(const NetworkState& state, double t, const SitePlan& plan, const SpinConfig& signs,
                         const SimParams& params, const TrialSetup& setup) {
  return RecallModel(plan, signs, params, setup).energy(state, t);
}

std::vector<double> eom_rhs(const NetworkState& state, double t, const SitePlan& plan, const SpinConfig& signs,
                            const SimParams& params, const TrialSetup& setup) {
  RecallModel model(plan, signs, params, setup);
  std::vector<double> dx;
  model.rhs(state.data(), dx, t);
  return dx;
}

double TrialResult::mean_deviation() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) sum += norm(positions[i] - traps[i]);
  return sum / static_cast<double>(positions.size());
}

TrialResult run_trial(const SitePlan& plan, const SpinConfig& stimulus_signs, const SimParams& params,
                      const TrialSetup& setup, bool record) {
  RecallModel model(plan, stimulus_signs, params, setup);
  const std::size_t n = plan.size();
  NetworkState state = NetworkState::normal(setup.traps);
  for (std::size_t i = 0; i < n; ++i) {
    const double sx = setup.seed[i];
    state.set_spin(i, sx, 0.0, -std::sqrt(kSpinLength * kSpinLength - sx * sx));
  }

  TrialResult result;
  result.traps = setup.traps;
  auto observe = [&](double t) {
    for (std::size_t i = 0; i < n; ++i)
      result.max_spin_length_error =
          std::max(result.max_spin_length_error, std::abs(state.spin_length(i) - kSpinLength));
    if (record) result.trajectory.push_back({t, state.data(), model.energy(state, t)});
  };

  using State = std::vector<double>;
  auto stepper = odeint::make_controlled(params.abs_tol, params.rel_tol, odeint::runge_kutta_fehlberg78<State>());
  auto system = [&model](const State& x, State& dxdt, double t) { model.rhs(x, dxdt, t); };

  const Schedule& sch = params.schedule;
  std::vector<double> stops = {sch.stimulus_on, sch.stimulus_hold, sch.stimulus_off, sch.t_end};
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  double t = 0.0;
  double dt = 1e-3;
  observe(t);
  for (const double stop : stops) {
    while (stop - t > 1e-12) {
      const double h = std::min(dt, stop - t);
      dt = h;
      if (stepper.try_step(system, state.data(), t, dt) == odeint::success) {
        ++result.steps;
        if (stop - t <= 1e-12) t = stop;
        observe(t);
      } else {
        ++result.rejected;
      }
      if (dt < 1e-12 * std::max(1.0, t))
        throw IntegrationError("step size underflow at t = " + io::format_double(t) + " ms", t);
      if (result.steps + result.rejected >= params.max_steps)
        throw IntegrationError("step budget exhausted at t = " + io::format_double(t) + " ms", t);
      for (const double v : state.data())
        if (!std::isfinite(v)) throw IntegrationError("non-finite state at t = " + io::format_double(t) + " ms", t);
    }
  }

  result.signs = state.sx_signs();
  result.positions = state.positions();
  result.final_energy = model.energy(state, sch.t_end);
  return result;
}

TrialResult run_recall_trial(const SitePlan& plan, const SpinConfig& stimulus_signs, const SimParams& params,
                             const NoiseModel& noise, RandomSource& rng, bool record) {
  return run_trial(plan, stimulus_signs, params, draw_trial_setup(plan, noise, params, rng), record);
}

void write_trial_trajectory_csv(std::ostream& out, const TrialResult& result) {
  const std::size_t n = result.traps.size();
  out << "t";
  for (const char* c : {"sx", "sy", "sz", "x", "y"})
    for (std::size_t i = 0; i < n; ++i) out << ',' << c << '_' << i;
  out << ",transverse,ising,stimulus,trap\n";
  for (const auto& s : result.trajectory) {
    out << io::format_double(s.t);
    for (const double v : s.state) out << ',' << io::format_double(v);
    const auto e = s.energy.per_spin_length();
    out << ',' << io::format_double(e.transverse) << ',' << io::format_double(e.ising) << ',' << io::format_double(e.stimulus)
        << ',' << io::format_double(e.trap) << '\n';
  }
}

double mean_trap_deviation(const SitePlan& plan, const SimParams& params, std::size_t trials,
                           const RandomSource& rng, unsigned threads) {
  if (trials == 0) throw ValidationError("need at least one calibration trial");
  const auto dev = parallel_map<double>(trials, threads, [&](std::size_t k) {
    RandomSource r = rng.split(k);
    const auto stimulus = SpinConfig::random_binary(plan.size(), r);
    return run_recall_trial(plan, stimulus, params, NoiseModel::none(), r).mean_deviation();
  });
  double sum = 0.0;
  for (const double d : dev) sum += d;
  return sum / static_cast<double>(trials);
}

TrapCalibration calibrate_trap_energy(const SitePlan& plan, const SimParams& params, double target,
                                      const RandomSource& rng, std::size_t trials, double rel_tol,
                                      unsigned threads) {
  if (!(target > 0.0)) throw ValidationError("target deviation must be positive");
  if (!params.elastic) throw ValidationError("calibration needs elastic positions");
  TrapCalibration cal;
  auto eval = [&](double e) {
    SimParams p = params;
    p.trap_energy = e;
    ++cal.evaluations;
    return mean_trap_deviation(plan, p, trials, rng, threads);
  };
  auto done = [&](double e, double d) {
    if (std::abs(d - target) > rel_tol * target) return false;
    cal.trap_energy = e;
    cal.deviation = d;
    return true;
  };

  // Deviation falls as the trap stiffens; grow a geometric bracket around the target.
  const double e0 = params.trap_energy;
  const double d0 = eval(e0);
  if (done(e0, d0)) return cal;
  double lo = e0;
  double hi = e0;
  bool bracketed = false;
  for (int k = 0; k < 12 && !bracketed; ++k) {
    if (d0 > target) {
      lo = hi;
      hi *= 4.0;
    } else {
      hi = lo;
      lo /= 4.0;
    }
    const double e = d0 > target ? hi : lo;
    const double d = eval(e);
    if (done(e, d)) return cal;
    bracketed = (d0 > target) ? d < target : d > target;
  }
  if (!bracketed) throw ConvergenceError("could not bracket the target trap deviation");

  for (int k = 0; k < 40; ++k) {
    const double mid = std::sqrt(lo * hi);
    const double d = eval(mid);
    if (done(mid, d)) return cal;
    if (d > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw ConvergenceError("trap calibration did not converge");
}

}  // namespace glassmem
