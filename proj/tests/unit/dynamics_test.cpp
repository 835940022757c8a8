#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "../support/oracles.hpp"
#include "glassmem/dynamics.hpp"
#include "glassmem/error.hpp"

using namespace glassmem;

namespace {

const CouplingMatrix kPair(2, {0, 1, 1, 0}, DiagonalPolicy::Zeroed);

const DynamicsKind kAllKinds[] = {DynamicsKind::mh(), DynamicsKind::sd(), DynamicsKind::sd(TieBreak::LowestIndex),
                                  DynamicsKind::sd_rate()};

// Deterministic greedy descent written without incremental fields.
std::vector<double> greedy_descent(const CouplingMatrix& J, std::vector<double> s) {
  for (;;) {
    std::size_t best = s.size();
    double best_d = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double d = delta_energy(J, SpinConfig(s), k);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    if (best == s.size()) return s;
    s[best] = -s[best];
  }
}

}  // namespace

TEST_CASE("dynamics kind names round trip") {
  for (auto k : kAllKinds) CHECK(parse_dynamics_kind(to_string(k)) == k);
  CHECK(parse_dynamics_kind("SD_RATE") == DynamicsKind::sd_rate());
  CHECK_THROWS_AS(parse_dynamics_kind("GD"), ValidationError);
}

TEST_CASE("two-spin ferromagnet relaxes to an aligned state") {
  RandomSource rng(1);
  std::set<std::vector<double>> seen;
  for (int t = 0; t < 200; ++t) {
    const auto out = relax(kPair, SpinConfig{1, -1}, DynamicsKind::sd(), rng);
    CHECK(is_local_min(kPair, out));
    seen.insert({out.values().begin(), out.values().end()});
  }
  CHECK(seen.size() == 2);
  CHECK(is_local_min(kPair, SpinConfig{1, 1}));
  CHECK_FALSE(is_local_min(kPair, SpinConfig{1, -1}));
}

TEST_CASE("a local minimum is returned unchanged") {
  RandomSource rng(2);
  const auto J = oracle::gaussian_matrix(10, rng);
  const auto minima = enumerate_minima(J);
  REQUIRE_FALSE(minima.empty());
  for (auto kind : kAllKinds) CHECK(relax(J, minima.front(), kind, rng) == minima.front());
}

TEST_CASE("SD from all 1024 starts ends in a local minimum") {
  RandomSource rng(10);
  const auto J = oracle::gaussian_matrix(10, rng);
  for (unsigned long b = 0; b < 1024; ++b) {
    const auto out = relax(J, SpinConfig(oracle::spins_of(b, 10)), DynamicsKind::sd(), rng);
    CHECK(is_local_min(J, out));
  }
}

TEST_CASE("minima count matches the energy-table oracle") {
  RandomSource rng(12);
  const auto J = oracle::gaussian_matrix(12, rng);
  std::size_t count = 0;
  for (unsigned long b = 0; b < 4096; ++b) count += is_local_min(J, SpinConfig(oracle::spins_of(b, 12)));
  const auto table = oracle::minima_from_energy_table(J);
  CHECK(count == table.size());
  CHECK(2 * enumerate_minima(J).size() == table.size());
}

TEST_CASE("enumerate minima small cases") {
  CHECK(enumerate_minima(kPair) == std::vector<SpinConfig>{SpinConfig{1, 1}});
  std::vector<double> e(16, 1.0);
  for (int i = 0; i < 4; ++i) e[i * 5] = 0.0;
  const CouplingMatrix ferro(4, e, DiagonalPolicy::Zeroed);
  CHECK(enumerate_minima(ferro) == std::vector<SpinConfig>{SpinConfig::all_up(4)});
  const CouplingMatrix big(25, std::vector<double>(625, 0.0), DiagonalPolicy::Zeroed);
  CHECK_THROWS_AS(enumerate_minima(big), ValidationError);
}

TEST_CASE("restart mode recovers the exhaustive set at n=14") {
  RandomSource rng(14);
  const auto J = oracle::gaussian_matrix(14, rng);
  const auto exact = enumerate_minima(J);
  const auto found = enumerate_minima_restart(J, 54000, DynamicsKind::mh(), rng);
  std::set<SpinConfig> ex(exact.begin(), exact.end());
  std::size_t hit = 0;
  for (const auto& m : found) hit += ex.count(m);
  CHECK(hit == found.size());
  CHECK(double(hit) >= 0.99 * double(exact.size()));
}

TEST_CASE("recall probability examples") {
  RandomSource rng(21);
  const auto J = oracle::gaussian_matrix(10, rng);
  const auto minima = enumerate_minima(J);
  const auto& m = minima.front();
  CHECK(recall_probability(J, m, 0, 50, DynamicsKind::sd(), rng) == 1.0);
  CHECK(recall_probability(J, m, 10, 50, DynamicsKind::sd(), rng) == 0.0);
  CHECK(recall_probability(J, m, 10, 50, DynamicsKind::sd(), rng, RecallScoring::TwinTolerant) == 1.0);
  CHECK_THROWS_AS(recall_probability(J, m, 11, 5, DynamicsKind::sd(), rng), ValidationError);

  // Exact fraction by deterministic relaxation of every single-flip corruption.
  for (const auto& mem : minima) {
    std::size_t back = 0;
    for (std::size_t k = 0; k < 10; ++k) {
      auto s = std::vector<double>(mem.values().begin(), mem.values().end());
      s[k] = -s[k];
      back += SpinConfig(greedy_descent(J, s)) == mem;
    }
    const double exact = back / 10.0;
    const int trials = 2000;
    const double p = recall_probability(J, mem, 1, trials, DynamicsKind::sd(), rng);
    const double sigma = std::sqrt(std::max(exact * (1 - exact), 1e-12) / trials);
    CHECK(std::abs(p - exact) <= 2 * sigma + 1e-12);
    const auto ex = exact_single_flip_recall(J, mem, DynamicsKind::sd(TieBreak::LowestIndex));
    REQUIRE(ex.has_value());
    CHECK(*ex == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("exact single-flip recall agrees with sampling for stochastic kinds") {
  RandomSource rng(31);
  const auto J = oracle::gaussian_matrix(12, rng);
  const auto minima = enumerate_minima(J);
  for (auto kind : {DynamicsKind::mh(), DynamicsKind::sd_rate()}) {
    for (std::size_t i = 0; i < std::min<std::size_t>(minima.size(), 4); ++i) {
      const auto ex = exact_single_flip_recall(J, minima[i], kind);
      REQUIRE(ex.has_value());
      const int trials = 4000;
      const double p = recall_probability(J, minima[i], 1, trials, kind, rng);
      CHECK(std::abs(p - *ex) <= 4 * std::sqrt(0.25 / trials));
    }
  }
}

TEST_CASE("trajectory csv and strictly decreasing energy") {
  RandomSource rng(4);
  const auto J = oracle::gaussian_matrix(12, rng);
  std::vector<TrajectoryStep> traj;
  const auto s0 = SpinConfig::random_binary(12, rng);
  relax(J, s0, DynamicsKind::mh(), rng, &traj);
  double prev = ising_energy(J, s0);
  for (const auto& st : traj) {
    CHECK(st.delta_energy < 0.0);
    CHECK(st.energy < prev);
    prev = st.energy;
  }
  std::ostringstream out;
  write_trajectory_csv(out, traj);
  CHECK(out.str().rfind("step,site,delta_energy,energy\n", 0) == 0);
}

TEST_CASE("dynamics properties over fuzzed instances") {
  RandomSource rng(777);
  const int cases = 10000;
  for (int c = 0; c < cases; ++c) {
    const std::size_t n = 2 + rng.index(19);
    const auto J = oracle::gaussian_matrix(n, rng);
    const auto s0 = SpinConfig::random_binary(n, rng);
    const auto kind = kAllKinds[rng.index(4)];
    std::vector<TrajectoryStep> traj;
    const auto out = relax(J, s0, kind, rng, &traj);
    REQUIRE(is_local_min(J, out));
    double prev = ising_energy(J, s0);
    for (const auto& st : traj) {
      REQUIRE(st.delta_energy < 0.0);
      REQUIRE(st.energy < prev);
      prev = st.energy;
    }
    REQUIRE(std::abs(prev - ising_energy(J, out)) < 1e-9 * (1 + std::abs(prev)));

    // Lowest-index SD ignores the random stream.
    RandomSource r1(c), r2(c + 1);
    const auto det = DynamicsKind::sd(TieBreak::LowestIndex);
    REQUIRE(relax(J, s0, det, r1) == relax(J, s0, det, r2));
  }
}

TEST_CASE("hebbian-like integer ties freeze under zero-cost rejection") {
  // J with all zero couplings: every state is a minimum, nothing moves.
  const CouplingMatrix zero(3, std::vector<double>(9, 0.0), DiagonalPolicy::Zeroed);
  RandomSource rng(0);
  for (auto kind : kAllKinds) CHECK(relax(zero, SpinConfig{1, -1, 1}, kind, rng) == SpinConfig{1, -1, 1});
  CHECK(enumerate_minima(zero).size() == 4);
}
