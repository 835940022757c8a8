#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "../support/plans.hpp"
#include "glassmem/cavity.hpp"
#include "glassmem/error.hpp"

using namespace glassmem;

namespace {

using fixture::kJ1Sites;

Vec2 random_point(RandomSource& rng, double radius) {
  for (;;) {
    const Vec2 p{rng.uniform(-radius, radius), rng.uniform(-radius, radius)};
    if (norm(p) <= radius) return p;
  }
}

// Direct transcription of the kernel with t = 1 and gamma = 0.
double point_kernel_oracle(Vec2 r, Vec2 rp, double w0) {
  const double dx = r.x - rp.x;
  const double dy = r.y - rp.y;
  return 0.25 * std::exp(-(dx * dx + dy * dy) / (2.0 * w0 * w0));
}

}  // namespace

TEST_CASE("cavity parameters") {
  const CavityParams p;
  const double a = 2.0 * 5.2 * 5.2 / (34.8 * 34.8);
  CHECK(std::abs(p.gamma() - (1 - a) / (1 + a)) < 1e-12);
  CHECK(std::abs(p.gamma()) < 1.0);
  CHECK(p.prefactor() == doctest::Approx(1.0 / (1.0 + 0.007 * 0.007)).epsilon(1e-9));
  CHECK_THROWS_AS(CavityParams(-1, 5.2, 0, -1, 1), ValidationError);
  CHECK_THROWS_AS(CavityParams(34.8, 0, 0, -1, 1), ValidationError);
  CHECK_THROWS_AS(CavityParams(34.8, 5.2, 7, -1, 1), ValidationError);
}

TEST_CASE("mehler kernel examples") {
  const CavityParams p;
  const double g = p.gamma();
  CHECK(mehler_kernel({0, 0}, {0, 0}, 1.0, p).real() == doctest::Approx((1 + g) * (1 + g) / (4 * (1 - g * g))));

  const double w0 = 30.0;
  const CavityParams point(w0, w0 / std::numbers::sqrt2, 0, -1.0, 0.0);
  CHECK(std::abs(point.gamma()) < 1e-15);
  RandomSource rng(1);
  for (int i = 0; i < 100; ++i) {
    const Vec2 r = random_point(rng, 80);
    const Vec2 rp = random_point(rng, 80);
    CHECK(mehler_kernel(r, rp, 1.0, point).real() == doctest::Approx(point_kernel_oracle(r, rp, w0)).epsilon(1e-13));
  }
}

TEST_CASE("closed-form coupling converges to the mode sum") {
  const CavityParams p;
  CHECK(mode_sum_coupling({0, 0}, {0, 0}, p, 300) == doctest::Approx(coupling({0, 0}, {0, 0}, p)).epsilon(1e-9));
  RandomSource rng(2);
  for (int i = 0; i < 5; ++i) {
    const Vec2 r = random_point(rng, 100);
    const Vec2 rp = random_point(rng, 100);
    const double closed = coupling(r, rp, p);
    CHECK(std::abs(mode_sum_coupling(r, rp, p, 300) - closed) < 1e-9 * std::max(1.0, std::abs(closed)));
  }
  // A nonzero mode family is projected the same way.
  const CavityParams p3(34.8, 5.2, 3, -2e4, 140);
  const Vec2 a{12, -7}, b{-20, 33};
  CHECK(mode_sum_coupling(a, b, p3, 300) == doctest::Approx(coupling(a, b, p3)).epsilon(1e-8));
}

TEST_CASE("coupling matrix on the 4x4 plan") {
  const CavityParams p;
  const SitePlan plan(kJ1Sites);
  const auto J = coupling_matrix(plan, p);
  CHECK(J.diagonal_policy() == DiagonalPolicy::Retained);
  bool pos = false, neg = false;
  std::vector<double> off;
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(J(i, i) > 0.0);
    for (std::size_t j = i + 1; j < 16; ++j) {
      pos |= J(i, j) > 0;
      neg |= J(i, j) < 0;
      off.push_back(std::abs(J(i, j)));
    }
  }
  CHECK(pos);
  CHECK(neg);
  std::sort(off.begin(), off.end());
  const double median = off[off.size() / 2];
  // Sites i and 15 - i sit near point-reflected positions.
  double mirror = 0.0;
  for (std::size_t i = 0; i < 8; ++i) mirror += std::abs(J(i, 15 - i)) / 8.0;
  CHECK(mirror > median);
  double strongest = 0.0;
  std::size_t si = 0, sj = 0;
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = i + 1; j < 16; ++j)
      if (std::abs(J(i, j)) > strongest) {
        strongest = std::abs(J(i, j));
        si = i;
        sj = j;
      }
  CHECK(si + sj == 15);

  // Permutation equivariance.
  RandomSource rng(3);
  std::vector<std::size_t> perm(16);
  for (std::size_t i = 0; i < 16; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  std::vector<Vec2> shuffled(16);
  for (std::size_t i = 0; i < 16; ++i) shuffled[i] = kJ1Sites[perm[i]];
  const auto Jp = coupling_matrix(shuffled, p);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) CHECK(Jp(i, j) == doctest::Approx(J(perm[i], perm[j])).epsilon(1e-14));

  const SitePlan one({{5, 5}});
  CHECK(coupling_matrix(one, p)(0, 0) > 0.0);
}

TEST_CASE("site plan json") {
  const auto plan = SitePlan::from_json("[[-79, -94], [1.5, 2]]");
  CHECK(plan.size() == 2);
  CHECK(plan[1] == Vec2{1.5, 2});
  CHECK(SitePlan::from_json(plan.to_json()).size() == 2);
  CHECK_THROWS_AS(SitePlan::from_json("[[1, 2], [1, 2]]"), ValidationError);
  CHECK_THROWS_AS(SitePlan::from_json("[[1, 2, 3]]"), ValidationError);
  CHECK_THROWS_AS(SitePlan::from_json("{"), ValidationError);
  CHECK_THROWS_AS(SitePlan::load("/nonexistent/plan.json"), ValidationError);
}

TEST_CASE("stimulus field examples") {
  const CavityParams p;
  const SitePlan plan(kJ1Sites);
  RandomSource rng(4);
  const auto s = SpinConfig::random_binary(16, rng);
  CHECK(std::abs(stimulus_field({3, 4}, plan, s, 1.0, std::numbers::pi / 2, p)) < 1e-15);

  const SitePlan single({{10, -20}});
  CHECK(stimulus_field({10, -20}, single, SpinConfig{1}, 2.0, 0.3, p) ==
        doctest::Approx(2.0 * std::cos(0.3) * coupling({10, -20}, {10, -20}, p)));

  // Each target sits in a lobe carrying its own sign.
  int matched = 0;
  int total = 0;
  for (int t = 0; t < 50; ++t) {
    const auto sig = SpinConfig::random_binary(16, rng);
    for (std::size_t i = 0; i < 16; ++i) {
      ++total;
      matched += stimulus_field(kJ1Sites[i], plan, sig, 1.0, 0.0, p) * sig[i] > 0.0;
    }
  }
  CHECK(matched >= total * 95 / 100);
}

TEST_CASE("gradient examples") {
  const CavityParams p;
  const auto [g0, g1] = grad_coupling({0, 0}, {0, 0}, p);
  CHECK(g0 == Vec2{0, 0});
  CHECK(g1 == Vec2{0, 0});
}

TEST_CASE("cavity properties over fuzzed points") {
  const CavityParams p;
  const CouplingKernel kernel(p);
  RandomSource rng(5);
  const double h = 1e-4;
  for (int c = 0; c < 10000; ++c) {
    const Vec2 r = random_point(rng, 100);
    const Vec2 rp = random_point(rng, 100);
    const double j = kernel.value(r, rp);
    REQUIRE(j == kernel.value(rp, r));

    for (int k = 0; k < 4; ++k) {
      const auto t = std::polar(1.0, 2 * std::numbers::pi * k / 7);
      const auto a = mehler_kernel(r, rp, t, p);
      const auto b = mehler_kernel(rp, r, t, p);
      REQUIRE(std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(a)));
    }

    const double th = rng.uniform(0, 2 * std::numbers::pi);
    const auto rot = [&](Vec2 v) { return Vec2{std::cos(th) * v.x - std::sin(th) * v.y, std::sin(th) * v.x + std::cos(th) * v.y}; };
    REQUIRE(std::abs(kernel.value(rot(r), rot(rp)) - j) <= 1e-12);

    const auto [dr, drp] = kernel.gradient(r, rp);
    const auto [er, erp] = kernel.gradient(rp, r);
    REQUIRE(std::abs(dr.x - erp.x) <= 1e-15 + 1e-13 * std::abs(dr.x));
    REQUIRE(std::abs(dr.y - erp.y) <= 1e-15 + 1e-13 * std::abs(dr.y));
    const double fx = (kernel.value(r + Vec2{h, 0}, rp) - kernel.value(r - Vec2{h, 0}, rp)) / (2 * h);
    const double fy = (kernel.value(r + Vec2{0, h}, rp) - kernel.value(r - Vec2{0, h}, rp)) / (2 * h);
    const double fxp = (kernel.value(r, rp + Vec2{h, 0}) - kernel.value(r, rp - Vec2{h, 0})) / (2 * h);
    const double scale = std::max({std::abs(dr.x), std::abs(dr.y), std::abs(drp.x), 1e-3 * std::abs(j), 1e-6});
    REQUIRE(std::abs(fx - dr.x) <= 1e-6 * scale);
    REQUIRE(std::abs(fy - dr.y) <= 1e-6 * scale);
    REQUIRE(std::abs(fxp - drp.x) <= 1e-6 * scale);

    // Linearity of the stimulus in disjoint sign vectors.
    const SitePlan plan({r, rp, random_point(rng, 100)});
    std::vector<double> wa{1, 0, 0}, wb{0, -1, 1}, ws{1, -1, 1};
    const Vec2 q = random_point(rng, 100);
    REQUIRE(std::abs(stimulus_field(q, plan, ws, 0.7, kernel) -
                     stimulus_field(q, plan, wa, 0.7, kernel) - stimulus_field(q, plan, wb, 0.7, kernel)) < 1e-13);
  }
}

TEST_CASE("assembled matrix and gradients agree with pointwise evaluation") {
  const CavityParams p;
  const CouplingKernel kernel(p);
  RandomSource rng(6);
  std::vector<Vec2> pos(7);
  for (auto& v : pos) v = random_point(rng, 100);
  std::vector<double> J;
  std::vector<Vec2> grad;
  kernel.assemble(pos, J, &grad);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 7; ++j) {
      CHECK(J[i * 7 + j] == J[j * 7 + i]);
      CHECK(J[i * 7 + j] == doctest::Approx(kernel.value(pos[i], pos[j])).epsilon(1e-12));
      if (i != j) {
        const auto g = kernel.gradient(pos[i], pos[j]).first;
        CHECK(grad[i * 7 + j].x == doctest::Approx(g.x).epsilon(1e-10));
        CHECK(grad[i * 7 + j].y == doctest::Approx(g.y).epsilon(1e-10));
      } else {
        const double h = 1e-4;
        const double fx = (kernel.value(pos[i] + Vec2{h, 0}, pos[i] + Vec2{h, 0}) -
                           kernel.value(pos[i] - Vec2{h, 0}, pos[i] - Vec2{h, 0})) / (2 * h);
        CHECK(grad[i * 7 + i].x == doctest::Approx(fx).epsilon(1e-6));
      }
    }
  }
}
