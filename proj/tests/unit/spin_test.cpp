#include <doctest.h>

#include <cmath>
#include <sstream>

#include "../support/oracles.hpp"
#include "glassmem/error.hpp"
#include "glassmem/io.hpp"
#include "glassmem/spin.hpp"

using namespace glassmem;

namespace {

CouplingMatrix pair_ferromagnet() { return CouplingMatrix(2, {0, 1, 1, 0}, DiagonalPolicy::Zeroed); }

}  // namespace

TEST_CASE("ising energy of a two-spin ferromagnet") {
  const auto J = pair_ferromagnet();
  CHECK(ising_energy(J, SpinConfig{1, 1}) == -1.0);
  CHECK(ising_energy(J, SpinConfig{1, -1}) == 1.0);
  CHECK_THROWS_AS(ising_energy(J, SpinConfig{1, 1, 1}), SizeError);
}

TEST_CASE("ising energy matches triple-loop summation on every n=4 state") {
  RandomSource rng(17);
  const auto J = oracle::gaussian_matrix(4, rng);
  const auto d = oracle::dense(J);
  for (unsigned long b = 0; b < 16; ++b) {
    const auto s = oracle::spins_of(b, 4);
    CHECK(ising_energy(J, SpinConfig(s)) == doctest::Approx(oracle::energy_triple_loop(d, s)).epsilon(1e-15));
  }
}

TEST_CASE("retained diagonal does not enter binary energies") {
  const CouplingMatrix J(2, {5, 1, 1, 7}, DiagonalPolicy::Retained);
  CHECK(ising_energy(J, SpinConfig{1, 1}) == -1.0);
  CHECK_THROWS_AS(CouplingMatrix(2, {5, 1, 1, 7}, DiagonalPolicy::Zeroed), ValidationError);
  CHECK_THROWS_AS(CouplingMatrix(2, {0, 1, 2, 0}, DiagonalPolicy::Zeroed), ValidationError);
  CHECK_THROWS_AS(CouplingMatrix(2, {0, NAN, NAN, 0}, DiagonalPolicy::Zeroed), ValidationError);
}

TEST_CASE("delta energy examples") {
  const auto J = pair_ferromagnet();
  CHECK(delta_energy(J, SpinConfig{1, 1}, 0) == 2.0);
  CHECK_THROWS(delta_energy(J, SpinConfig{1, 1}, 2));

  RandomSource rng(8);
  const auto J8 = oracle::gaussian_matrix(8, rng);
  const auto d = oracle::dense(J8);
  const auto s = SpinConfig::random_binary(8, rng);
  for (std::size_t k = 0; k < 8; ++k) {
    std::vector<double> v(s.values().begin(), s.values().end());
    const double before = oracle::energy_triple_loop(d, v);
    v[k] = -v[k];
    const double after = oracle::energy_triple_loop(d, v);
    CHECK(delta_energy(J8, s, k) == doctest::Approx(after - before).epsilon(1e-12));
  }
}

TEST_CASE("overlap distance examples") {
  const SpinConfig a{1.0, 0.0};
  const SpinConfig b{0.0, 1.0};
  CHECK(overlap_distance(a, a) == 0.0);
  CHECK(overlap_distance(a, b) == 1.0);
  CHECK_THROWS_AS(overlap_distance(SpinConfig{1.0, 1.0}, a), ValidationError);
  CHECK_THROWS_AS(overlap_distance(a, SpinConfig{1.0, 0.0, 0.0}), SizeError);

  RandomSource rng(3);
  for (std::size_t k = 0; k <= 8; ++k) {
    const auto s = SpinConfig::random_binary(16, rng);
    const auto sites = choose_error_sites(16, k, rng);
    const auto t = flip_sites(s, sites);
    CHECK(overlap_distance(s.uniform_amplitude(), t.uniform_amplitude()) == doctest::Approx(double(k)).epsilon(1e-12));
  }
}

TEST_CASE("apply errors examples") {
  RandomSource rng(5);
  const auto s = SpinConfig::random_binary(16, rng);
  CHECK(apply_errors(s, 0, rng) == s);
  CHECK(apply_errors(s, 16, rng) == s.negated());
  CHECK_THROWS_AS(apply_errors(s, 17, rng), ValidationError);

  std::vector<int> hits(16, 0);
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const auto c = apply_errors(s, 3, rng);
    CHECK(hamming_distance(c, s) == 3);
    for (std::size_t i = 0; i < 16; ++i) hits[i] += c[i] != s[i];
  }
  for (int h : hits) CHECK(std::abs(h / double(draws) - 3.0 / 16.0) < 0.01);
}

TEST_CASE("spin config validation and helpers") {
  CHECK_THROWS_AS(SpinConfig(std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(SpinConfig{INFINITY}, ValidationError);
  CHECK(SpinConfig{-1, 1, -1}.canonical() == SpinConfig{1, -1, 1});
  CHECK(SpinConfig{0.0, -0.6, 0.8}.canonical() == SpinConfig{0.0, 0.6, -0.8});
  CHECK(SpinConfig::from_bits(0b101, 3) == SpinConfig{-1, 1, -1});
  CHECK(SpinConfig{-1, 1, -1}.bits() == 0b101);
  CHECK(SpinConfig{3.0, 4.0}.normalized().is_normalized());
  CHECK_THROWS(SpinConfig{0.0, 0.0}.normalized());
}

TEST_CASE("io round trips are bit exact") {
  RandomSource rng(11);
  std::vector<double> e(25);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i; j < 5; ++j) e[i * 5 + j] = e[j * 5 + i] = rng.normal() * 1e-3 + (i == j);
  const CouplingMatrix J(5, e, DiagonalPolicy::Retained);

  std::stringstream csv;
  io::write_matrix_csv(csv, J);
  CHECK(io::read_matrix_csv(csv, DiagonalPolicy::Retained) == J);

  std::stringstream bin;
  io::write_matrix_binary(bin, J);
  CHECK(io::read_matrix_binary(bin) == J);

  const SpinConfig s{0.125, -0.3, 1e-17};
  CHECK(io::parse_spin_config(io::format_spin_config(s)) == s);
  CHECK(io::format_spin_config(SpinConfig{1, -1}) == "+1,-1");
  CHECK(io::parse_spin_config("+1,-1") == SpinConfig{1, -1});
}

TEST_CASE("random source determinism and splitting") {
  RandomSource a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.engine()() == b.engine()());
  RandomSource c(42);
  c.uniform();
  CHECK(c.split(3).seed() == RandomSource(42).split(3).seed());
  CHECK(RandomSource(42).split(3).seed() != RandomSource(42).split(4).seed());
}

TEST_CASE("spin-core properties over fuzzed instances") {
  RandomSource rng(20240611);
  const int cases = 10000;
  for (int c = 0; c < cases; ++c) {
    const std::size_t n = 2 + rng.index(15);
    const auto J = oracle::gaussian_matrix(n, rng);
    const auto s = SpinConfig::random_binary(n, rng);

    REQUIRE(ising_energy(J, s) == ising_energy(J, s.negated()));

    const double e0 = ising_energy(J, s);
    const std::size_t k = rng.index(n);
    const double d = delta_energy(J, s, k);
    const double e1 = ising_energy(J, s.flipped(k));
    REQUIRE(std::abs(e1 - e0 - d) <= 1e-12 * (1.0 + std::abs(e0)));
    const double back = e1 + delta_energy(J, s.flipped(k), k);
    REQUIRE(std::abs(back - e0) <= 1e-12 * (1.0 + std::abs(e0)));

    const auto t = SpinConfig::random_binary(n, rng);
    const auto a = s.uniform_amplitude();
    const auto b = t.uniform_amplitude();
    const double dab = overlap_distance(a, b);
    REQUIRE(dab >= 0.0);
    REQUIRE(dab == overlap_distance(b, a));
    REQUIRE(std::abs(dab - overlap_distance(a.negated(), b)) < 1e-12);
    const std::size_t h = hamming_distance(s, t);
    REQUIRE(std::abs(dab - double(std::min(h, n - h))) < 1e-9);

    const auto sites = choose_error_sites(n, rng.index(n + 1), rng);
    REQUIRE(flip_sites(flip_sites(s, sites), sites) == s);
  }
}
