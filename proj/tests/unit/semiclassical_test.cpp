#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "../support/plans.hpp"
#include "glassmem/error.hpp"
#include "glassmem/semiclassical.hpp"

using namespace glassmem;

namespace {

SitePlan random_plan(std::size_t n, RandomSource& rng) {
  std::vector<Vec2> sites;
  while (sites.size() < n) {
    const Vec2 p{rng.uniform(-90.0, 90.0), rng.uniform(-90.0, 90.0)};
    bool far = true;
    for (const auto& q : sites) far = far && norm(p - q) > 5.0;
    if (far) sites.push_back(p);
  }
  return SitePlan(sites);
}

NetworkState random_state(const TrialSetup& setup, RandomSource& rng) {
  NetworkState s(setup.traps);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double rho = std::sqrt(1.0 - z * z);
    s.set_spin(i, kSpinLength * rho * std::cos(phi), kSpinLength * rho * std::sin(phi), kSpinLength * z);
    s.set_position(i, setup.traps[i] + Vec2{rng.normal(0.0, 2.0), rng.normal(0.0, 2.0)});
  }
  return s;
}

const SitePlan& j1() {
  static const SitePlan plan(fixture::kJ1Sites);
  return plan;
}

SimParams fast_params() {
  SimParams p;
  p.rel_tol = 1e-6;
  p.abs_tol = 1e-8;
  return p;
}

}  // namespace

TEST_CASE("pump and stimulus schedules") {
  const Schedule s;
  CHECK(s.pump(0.0) == 0.0);
  CHECK(s.pump(8.0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(s.pump(20.0) == doctest::Approx(4.0).epsilon(1e-14));
  for (double t = 0.0; t < 8.0; t += 0.1) CHECK(s.pump(t + 0.1) > s.pump(t));
  CHECK(s.stimulus(0.0) == 0.0);
  CHECK(s.stimulus(0.8) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s.stimulus(1.6) == 1.0);
  CHECK(s.stimulus(3.0) == 1.0);
  CHECK(s.stimulus(6.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s.stimulus(7.0) == 0.0);
  CHECK(s.stimulus(7.5) == 0.0);
  Schedule bad;
  bad.stimulus_off = 4.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("trial setup draws") {
  RandomSource rng(1);
  const SimParams p;
  const auto clean = draw_trial_setup(j1(), NoiseModel::none(), p, rng);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(clean.traps[i] == j1()[i]);
    CHECK(clean.amplitudes[i] == 1.0);
    CHECK(clean.phases[i] == 0.0);
    CHECK(std::abs(clean.seed[i]) == doctest::Approx(1e-4 * kSpinLength));
  }
  CHECK(clean.global_phase == 0.0);

  // Toggling a noise channel leaves the other draws untouched.
  RandomSource a(9);
  RandomSource b(9);
  const auto only_stim = draw_trial_setup(j1(), NoiseModel::with(false, true), p, a);
  const auto both = draw_trial_setup(j1(), NoiseModel::both(), p, b);
  CHECK(only_stim.seed == both.seed);
  CHECK(only_stim.amplitudes == both.amplitudes);
  CHECK(only_stim.traps != both.traps);

  RandomSource stats(3);
  double sum = 0.0;
  double sq = 0.0;
  int count = 0;
  for (int k = 0; k < 400; ++k) {
    const auto s = draw_trial_setup(j1(), NoiseModel::both(), p, stats);
    for (std::size_t i = 0; i < 16; ++i) {
      const double dx = s.traps[i].x - j1()[i].x;
      sum += dx;
      sq += dx * dx;
      ++count;
    }
  }
  CHECK(std::abs(sum / count) < 0.03);
  CHECK(std::sqrt(sq / count) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("normal state energy and fixed point") {
  RandomSource rng(2);
  SimParams p;
  const auto signs = SpinConfig::random_binary(16, rng);
  const auto setup = draw_trial_setup(j1(), NoiseModel::none(), p, rng);
  const auto normal = NetworkState::normal(setup.traps);
  const auto e = total_energy(normal, 0.0, j1(), signs, p, setup);
  CHECK(e.total() == doctest::Approx(-16 * p.omega_z / 2.0).epsilon(1e-15));
  CHECK(e.ising == 0.0);
  CHECK(e.stimulus == 0.0);
  CHECK(e.trap == 0.0);
  CHECK(e.per_spin_length().transverse == doctest::Approx(-16 * p.omega_z));

  // Without a stimulus the normal state is stationary at any pump strength.
  p.stimulus_amplitude = 0.0;
  for (double t : {0.0, 3.0, 8.0}) {
    const auto d = eom_rhs(normal, t, j1(), signs, p, setup);
    for (double v : d) CHECK(v == 0.0);
  }
}

TEST_CASE("trap term by hand") {
  RandomSource rng(4);
  SimParams p;
  p.trap_energy = 123.0;
  p.trap_waist = 17.0;
  const auto plan = random_plan(5, rng);
  const auto setup = draw_trial_setup(plan, NoiseModel::none(), p, rng);
  auto s = NetworkState::normal(setup.traps);
  const Vec2 offsets[] = {{1, 0}, {0, 2}, {-1, -1}, {0.5, 0.25}, {0, 0}};
  double hand = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    s.set_position(i, setup.traps[i] + offsets[i]);
    hand += 0.5 * 123.0 * (offsets[i].x * offsets[i].x + offsets[i].y * offsets[i].y) / (17.0 * 17.0);
  }
  const auto e = total_energy(s, 0.0, plan, SpinConfig::all_up(5), p, setup);
  CHECK(e.trap == doctest::Approx(hand).epsilon(1e-14));
}

TEST_CASE("critical pump and stimulus normalization") {
  RandomSource rng(5);
  const SimParams p;
  const auto setup = draw_trial_setup(j1(), NoiseModel::none(), p, rng);
  RecallModel m(j1(), SpinConfig::all_up(16), p, setup);
  const auto J = coupling_matrix(j1(), p.cavity);
  const double lambda = largest_eigenvalue(J);
  const double detune = 1.0 + std::pow(p.cavity.kappa() / p.cavity.delta_C(), 2);
  CHECK(2.0 * kSpinLength * m.g_critical() * lambda == doctest::Approx(p.omega_z * detune).epsilon(1e-12));
  double diag = 0.0;
  for (std::size_t i = 0; i < 16; ++i) diag += J(i, i);
  CHECK(m.stimulus_scale() * diag / 16.0 == doctest::Approx(0.5 * p.omega_z).epsilon(1e-12));
}

TEST_CASE("semiclassical properties over fuzzed states") {
  RandomSource rng(77);
  for (int c = 0; c < 10000; ++c) {
    const std::size_t n = 1 + rng.index(6);
    const auto plan = random_plan(n, rng);
    SimParams p;
    p.trap_energy = rng.uniform(10.0, 2000.0);
    const auto setup = draw_trial_setup(plan, NoiseModel::both(), p, rng);
    const auto signs = SpinConfig::random_binary(n, rng);
    const auto state = random_state(setup, rng);
    const double t = rng.uniform(0.0, 8.0);
    RecallModel model(plan, signs, p, setup);

    std::vector<double> d;
    model.rhs(state.data(), d, t);
    for (std::size_t i = 0; i < n; ++i) {
      const double sdot = state.sx(i) * d[i] + state.sy(i) * d[n + i] + state.sz(i) * d[2 * n + i];
      REQUIRE(std::abs(sdot) < 1e-12);
    }

    // Analytic position gradient against central differences of the energy.
    const auto grad = model.position_gradient(state, t);
    double scale = 0.0;
    for (const auto& g : grad) scale = std::max(scale, norm(g));
    const double h = 1e-4;
    for (std::size_t i = 0; i < n; ++i) {
      for (int axis = 0; axis < 2; ++axis) {
        auto plus = state;
        auto minus = state;
        const Vec2 step = axis == 0 ? Vec2{h, 0.0} : Vec2{0.0, h};
        plus.set_position(i, state.position(i) + step);
        minus.set_position(i, state.position(i) - step);
        const double fd = (model.energy(plus, t).total() - model.energy(minus, t).total()) / (2.0 * h);
        const double an = axis == 0 ? grad[i].x : grad[i].y;
        REQUIRE(std::abs(fd - an) <= 1e-6 * scale + 1e-9);
      }
      // The position rows of the derivative are -mobility * dE/dr.
      REQUIRE(d[3 * n + i] == doctest::Approx(-p.mobility() * grad[i].x).epsilon(1e-12).scale(scale));
      REQUIRE(d[4 * n + i] == doctest::Approx(-p.mobility() * grad[i].y).epsilon(1e-12).scale(scale));
    }

    // Z2: negating the stimulus and every transverse component negates the derivative of Sx and Sy.
    std::vector<double> neg_signs(signs.values().begin(), signs.values().end());
    for (auto& v : neg_signs) v = -v;
    RecallModel mirrored(plan, SpinConfig(neg_signs), p, setup);
    auto flipped = state;
    for (std::size_t i = 0; i < n; ++i) flipped.set_spin(i, -state.sx(i), -state.sy(i), state.sz(i));
    std::vector<double> dm;
    mirrored.rhs(flipped.data(), dm, t);
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(dm[i] == -d[i]);
      REQUIRE(dm[n + i] == -d[n + i]);
      REQUIRE(dm[2 * n + i] == d[2 * n + i]);
      REQUIRE(dm[3 * n + i] == d[3 * n + i]);
    }
    REQUIRE(mirrored.energy(flipped, t).total() == doctest::Approx(model.energy(state, t).total()).epsilon(1e-12));
  }
}

TEST_CASE("energy decreases along frozen-spin position descent") {
  RandomSource rng(8);
  for (int c = 0; c < 20; ++c) {
    const auto plan = random_plan(6, rng);
    const SimParams p;
    const auto setup = draw_trial_setup(plan, NoiseModel::none(), p, rng);
    RecallModel model(plan, SpinConfig::random_binary(6, rng), p, setup);
    auto state = random_state(setup, rng);
    const double t = rng.uniform(0.5, 7.5);
    double previous = model.energy(state, t).total();
    for (int k = 0; k < 200; ++k) {
      std::vector<double> d;
      model.rhs(state.data(), d, t);
      for (std::size_t i = 3 * 6; i < 5 * 6; ++i) state.data()[i] += 1e-4 * d[i];
      const double e = model.energy(state, t).total();
      CHECK(e <= previous + 1e-12 * std::abs(previous));
      previous = e;
    }
  }
}

TEST_CASE("no pump and no stimulus leaves the normal state untouched") {
  RandomSource rng(10);
  SimParams p = fast_params();
  p.schedule.pump_final = 0.0;
  p.stimulus_amplitude = 0.0;
  p.seed_scale = 0.0;
  const auto r = run_recall_trial(j1(), SpinConfig::random_binary(16, rng), p, NoiseModel::none(), rng);
  CHECK(r.mean_deviation() == 0.0);
  CHECK(r.max_spin_length_error < 1e-15);
  CHECK(r.final_energy.total() == doctest::Approx(-8.0 * p.omega_z).epsilon(1e-15));
}

TEST_CASE("positions return to the traps once the drive is off") {
  RandomSource rng(11);
  SimParams p = fast_params();
  p.schedule.pump_final = 0.0;
  const auto r = run_recall_trial(j1(), SpinConfig::random_binary(16, rng), p, NoiseModel::none(), rng, true);
  double peak = 0.0;
  for (const auto& s : r.trajectory) {
    for (std::size_t i = 0; i < 16; ++i) {
      const Vec2 d{s.state[48 + i] - j1()[i].x, s.state[64 + i] - j1()[i].y};
      peak = std::max(peak, norm(d));
    }
  }
  CHECK(peak > 1e-3);
  CHECK(r.mean_deviation() < 1e-6);
}

TEST_CASE("a full trial conserves spin length and organizes the spins") {
  RandomSource rng(12);
  SimParams p;
  p.stimulus_amplitude = 0.0;
  const auto r = run_recall_trial(j1(), SpinConfig::all_up(16), p, NoiseModel::none(), rng, true);
  CHECK(r.max_spin_length_error < 1e-6);
  const auto& last = r.trajectory.back();
  CHECK(last.t == 8.0);
  for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(last.state[i]) > 0.4);
}

TEST_CASE("outputs are mirrored under a global flip of stimulus and seed") {
  RandomSource rng(13);
  const SimParams p = fast_params();
  for (int c = 0; c < 3; ++c) {
    const auto s = SpinConfig::random_binary(16, rng);
    auto setup = draw_trial_setup(j1(), NoiseModel::both(), p, rng);
    const auto a = run_trial(j1(), s, p, setup);
    for (auto& v : setup.seed) v = -v;
    const auto b = run_trial(j1(), s.negated(), p, setup);
    CHECK(b.signs == a.signs.negated());
    CHECK(b.positions == a.positions);
  }
}

TEST_CASE("frozen positions in the stiff-trap limit") {
  RandomSource rng(14);
  SimParams p = fast_params();
  p.elastic = false;
  const auto r = run_recall_trial(j1(), SpinConfig::random_binary(16, rng), p, NoiseModel::both(), rng);
  CHECK(r.mean_deviation() == 0.0);
  CHECK(r.final_energy.trap == 0.0);
}

TEST_CASE("recall outcomes are insensitive to tolerance and seed scale") {
  RandomSource rng(15);
  const SimParams base;
  int seed_changes = 0;
  for (int c = 0; c < 20; ++c) {
    const auto s = SpinConfig::random_binary(16, rng);
    const auto setup = draw_trial_setup(j1(), NoiseModel::none(), base, rng);
    const auto a = run_trial(j1(), s, base, setup);
    SimParams half = base;
    half.rel_tol /= 2.0;
    half.abs_tol /= 2.0;
    CHECK(run_trial(j1(), s, half, setup).signs == a.signs);
    if (c < 4) {
      for (double scale : {0.1, 10.0}) {
        auto scaled = setup;
        for (auto& v : scaled.seed) v *= scale;
        seed_changes += run_trial(j1(), s, base, scaled).signs != a.signs;
      }
    }
  }
  CHECK(seed_changes == 0);
}

TEST_CASE("lazy coupling refresh reproduces outcomes") {
  RandomSource rng(16);
  SimParams lazy = fast_params();
  lazy.lazy_threshold = 1e-3;
  for (int c = 0; c < 3; ++c) {
    const auto s = SpinConfig::random_binary(16, rng);
    const auto setup = draw_trial_setup(j1(), NoiseModel::none(), lazy, rng);
    CHECK(run_trial(j1(), s, lazy, setup).signs == run_trial(j1(), s, fast_params(), setup).signs);
  }
}

TEST_CASE("integration failures carry a time stamp") {
  RandomSource rng(17);
  SimParams p;
  p.max_steps = 50;
  try {
    run_recall_trial(j1(), SpinConfig::all_up(16), p, NoiseModel::none(), rng);
    FAIL("expected an integration error");
  } catch (const IntegrationError& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() < 8.0);
  }
}

TEST_CASE("trajectory csv layout") {
  RandomSource rng(18);
  SimParams p = fast_params();
  const SitePlan plan({{0, 0}, {30, 10}});
  const auto r = run_recall_trial(plan, SpinConfig{1, -1}, p, NoiseModel::none(), rng, true);
  std::ostringstream out;
  write_trial_trajectory_csv(out, r);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,sx_0,sx_1,sy_0,sy_1,sz_0,sz_1,x_0,x_1,y_0,y_1,transverse,ising,stimulus,trap");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) {
    CHECK(std::count(line.begin(), line.end(), ',') == 14);
    ++rows;
  }
  CHECK(rows == r.trajectory.size());
  CHECK(rows == r.steps + 1);
}

TEST_CASE("trap calibration errors") {
  const SitePlan plan({{0, 0}, {30, 10}});
  SimParams p = fast_params();
  CHECK_THROWS_AS(calibrate_trap_energy(plan, p, -1.0, RandomSource(1)), ValidationError);
  p.elastic = false;
  CHECK_THROWS_AS(calibrate_trap_energy(plan, p, 1.0, RandomSource(1)), ValidationError);
  p.elastic = true;
  CHECK_THROWS_AS(calibrate_trap_energy(plan, p, 1e6, RandomSource(1), 1), ConvergenceError);
}
