#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "glassmem/random.hpp"

namespace glassmem {

/// Tolerance used when validating that a configuration has unit norm.
inline constexpr double kNormTolerance = 1e-6;

/// A length-n configuration of spin components.
///
/// Binary configurations hold exactly +1/-1; measured configurations are
/// real amplitudes that are usually normalized to unit Euclidean norm.
class SpinConfig {
 public:
  SpinConfig() = default;
  explicit SpinConfig(std::vector<double> values);
  SpinConfig(std::initializer_list<double> values);

  static SpinConfig all_up(std::size_t n);
  static SpinConfig random_binary(std::size_t n, RandomSource& rng);
  /// Binary configuration whose bit k (LSB first) set means spin k is -1.
  static SpinConfig from_bits(std::uint64_t bits, std::size_t n);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  bool is_binary() const noexcept;
  bool is_normalized(double tol = kNormTolerance) const noexcept;

  SpinConfig flipped(std::size_t k) const;
  SpinConfig negated() const;
  /// Sign pattern; zero entries map to +1.
  SpinConfig signs() const;
  /// Explicit rescaling to unit norm. Throws on an all-zero configuration.
  SpinConfig normalized() const;
  /// Binary configuration rescaled by 1/sqrt(n) so it can enter overlap_distance.
  SpinConfig uniform_amplitude() const;
  /// Global flip chosen so that the first nonzero entry is positive.
  SpinConfig canonical() const;

  /// Bit pattern of the sign configuration (bit k set means negative). Requires n <= 64.
  std::uint64_t bits() const;

  friend bool operator==(const SpinConfig&, const SpinConfig&) = default;
  friend auto operator<=>(const SpinConfig& a, const SpinConfig& b) { return a.values_ <=> b.values_; }

 private:
  std::vector<double> values_;
};

enum class DiagonalPolicy { Zeroed, Retained };

/// Symmetric dense n x n interaction matrix.
class CouplingMatrix {
 public:
  CouplingMatrix() = default;
  /// Row-major entries; validated symmetric and finite. With DiagonalPolicy::Zeroed
  /// every diagonal entry must be exactly zero.
  CouplingMatrix(std::size_t n, std::vector<double> entries, DiagonalPolicy policy);

  /// Evaluates `entry(i, j)` for i <= j and mirrors it, so symmetry is exact.
  static CouplingMatrix build(std::size_t n, DiagonalPolicy policy,
                              const std::function<double(std::size_t, std::size_t)>& entry);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {entries_.data() + i * n_, n_}; }
  std::span<const double> entries() const noexcept { return entries_; }
  DiagonalPolicy diagonal_policy() const noexcept { return policy_; }

  CouplingMatrix scaled(double c) const;
  CouplingMatrix with_zero_diagonal() const;

  friend bool operator==(const CouplingMatrix&, const CouplingMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> entries_;
  DiagonalPolicy policy_ = DiagonalPolicy::Zeroed;
};

/// E = -(1/2) sum_{i != j} J_ij s_i s_j. Diagonal entries never contribute.
double ising_energy(const CouplingMatrix& J, const SpinConfig& s);

/// Energy change from flipping spin k of a binary configuration: 2 s_k sum_{j != k} J_kj s_j.
double delta_energy(const CouplingMatrix& J, const SpinConfig& s, std::size_t k);

/// d = (n/2)(1 - |<a, b>|) for unit-norm inputs; equals the Hamming distance
/// for uniform-amplitude binary pairs.
double overlap_distance(const SpinConfig& a, const SpinConfig& b);

/// `e` distinct sites chosen uniformly at random, in draw order.
std::vector<std::size_t> choose_error_sites(std::size_t n, std::size_t e, RandomSource& rng);

/// Copy of s with the listed sites sign-flipped.
SpinConfig flip_sites(const SpinConfig& s, std::span<const std::size_t> sites);

/// Copy of a binary s with e distinct uniformly chosen sites flipped.
SpinConfig apply_errors(const SpinConfig& s, std::size_t e, RandomSource& rng);

/// Number of sites whose signs differ.
std::size_t hamming_distance(const SpinConfig& a, const SpinConfig& b);

}  // namespace glassmem
