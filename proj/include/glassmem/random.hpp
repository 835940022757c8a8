#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace glassmem {

/// Seeded pseudo-random stream.
///
/// Child streams are derived from the seed alone (never from consumed engine
/// state), so `split(k)` gives the same stream regardless of how much of the
/// parent has been used or which thread asks for it.
class RandomSource {
 public:
  using engine_type = std::mt19937_64;
  static constexpr std::string_view algorithm = "mt19937_64+splitmix64";

  explicit RandomSource(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  RandomSource split(std::uint64_t stream) const;
  RandomSource split(std::uint64_t a, std::uint64_t b) const { return split(a).split(b); }

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n);
  /// Uniform integer on [lo, hi].
  long integer(long lo, long hi);
  double normal(double mean = 0.0, double stddev = 1.0);
  /// +1 or -1 with equal probability.
  int sign();

  engine_type& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  engine_type engine_;
};

/// SplitMix64 finalizer; used to derive well-separated child seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace glassmem
