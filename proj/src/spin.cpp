#include "glassmem/spin.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "glassmem/error.hpp"

namespace glassmem {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw SizeError(std::string(what) + ": size mismatch (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

void require_binary(const SpinConfig& s, const char* what) {
  if (!s.is_binary()) throw ValidationError(std::string(what) + ": configuration is not binary");
}

}  // namespace

SpinConfig::SpinConfig(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("SpinConfig: length must be >= 1");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("SpinConfig: non-finite entry");
  }
}

SpinConfig::SpinConfig(std::initializer_list<double> values) : SpinConfig(std::vector<double>(values)) {}

SpinConfig SpinConfig::all_up(std::size_t n) { return SpinConfig(std::vector<double>(n, 1.0)); }

SpinConfig SpinConfig::random_binary(std::size_t n, RandomSource& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.sign();
  return SpinConfig(std::move(v));
}

SpinConfig SpinConfig::from_bits(std::uint64_t bits, std::size_t n) {
  if (n > 64) throw ValidationError("SpinConfig::from_bits: n > 64");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = ((bits >> i) & 1U) ? -1.0 : 1.0;
  return SpinConfig(std::move(v));
}

bool SpinConfig::is_binary() const noexcept {
  for (double v : values_) {
    if (v != 1.0 && v != -1.0) return false;
  }
  return true;
}

bool SpinConfig::is_normalized(double tol) const noexcept {
  const double norm2 = std::inner_product(values_.begin(), values_.end(), values_.begin(), 0.0);
  return std::abs(norm2 - 1.0) <= tol;
}

SpinConfig SpinConfig::flipped(std::size_t k) const {
  if (k >= size()) throw ValidationError("SpinConfig::flipped: index out of range");
  SpinConfig out = *this;
  out.values_[k] = -out.values_[k];
  return out;
}

SpinConfig SpinConfig::negated() const {
  SpinConfig out = *this;
  for (auto& v : out.values_) v = -v;
  return out;
}

SpinConfig SpinConfig::signs() const {
  SpinConfig out = *this;
  for (auto& v : out.values_) v = v < 0.0 ? -1.0 : 1.0;
  return out;
}

SpinConfig SpinConfig::normalized() const {
  const double norm = std::sqrt(std::inner_product(values_.begin(), values_.end(), values_.begin(), 0.0));
  if (norm == 0.0) throw ValidationError("SpinConfig::normalized: zero configuration");
  SpinConfig out = *this;
  for (auto& v : out.values_) v /= norm;
  return out;
}

SpinConfig SpinConfig::uniform_amplitude() const {
  require_binary(*this, "SpinConfig::uniform_amplitude");
  const double scale = 1.0 / std::sqrt(static_cast<double>(size()));
  SpinConfig out = *this;
  for (auto& v : out.values_) v *= scale;
  return out;
}

SpinConfig SpinConfig::canonical() const {
  for (double v : values_) {
    if (v > 0.0) return *this;
    if (v < 0.0) return negated();
  }
  return *this;
}

std::uint64_t SpinConfig::bits() const {
  if (size() > 64) throw ValidationError("SpinConfig::bits: n > 64");
  std::uint64_t b = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (values_[i] < 0.0) b |= (std::uint64_t{1} << i);
  }
  return b;
}

CouplingMatrix::CouplingMatrix(std::size_t n, std::vector<double> entries, DiagonalPolicy policy)
    : n_(n), entries_(std::move(entries)), policy_(policy) {
  if (n_ == 0) throw ValidationError("CouplingMatrix: n must be >= 1");
  require_same_size(entries_.size(), n_ * n_, "CouplingMatrix");
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = entries_[i * n_ + j];
      if (!std::isfinite(v)) throw ValidationError("CouplingMatrix: non-finite entry");
      if (v != entries_[j * n_ + i]) throw ValidationError("CouplingMatrix: matrix is not symmetric");
    }
    if (policy_ == DiagonalPolicy::Zeroed && entries_[i * n_ + i] != 0.0) {
      throw ValidationError("CouplingMatrix: nonzero diagonal under Zeroed policy");
    }
  }
}

CouplingMatrix CouplingMatrix::build(std::size_t n, DiagonalPolicy policy,
                                     const std::function<double(std::size_t, std::size_t)>& entry) {
  std::vector<double> e(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (policy == DiagonalPolicy::Retained) e[i * n + i] = entry(i, i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = entry(i, j);
      e[i * n + j] = v;
      e[j * n + i] = v;
    }
  }
  return CouplingMatrix(n, std::move(e), policy);
}

CouplingMatrix CouplingMatrix::scaled(double c) const {
  CouplingMatrix out = *this;
  for (auto& v : out.entries_) v *= c;
  return out;
}

CouplingMatrix CouplingMatrix::with_zero_diagonal() const {
  CouplingMatrix out = *this;
  for (std::size_t i = 0; i < n_; ++i) out.entries_[i * n_ + i] = 0.0;
  out.policy_ = DiagonalPolicy::Zeroed;
  return out;
}

double ising_energy(const CouplingMatrix& J, const SpinConfig& s) {
  require_same_size(J.size(), s.size(), "ising_energy");
  const std::size_t n = s.size();
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = J.row(i);
    double h = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) h += row[j] * s[j];
    e -= s[i] * h;
  }
  return e;
}

double delta_energy(const CouplingMatrix& J, const SpinConfig& s, std::size_t k) {
  require_same_size(J.size(), s.size(), "delta_energy");
  if (k >= s.size()) throw ValidationError("delta_energy: site index out of range");
  require_binary(s, "delta_energy");
  const auto row = J.row(k);
  double h = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (j != k) h += row[j] * s[j];
  }
  return 2.0 * s[k] * h;
}

double overlap_distance(const SpinConfig& a, const SpinConfig& b) {
  require_same_size(a.size(), b.size(), "overlap_distance");
  if (!a.is_normalized() || !b.is_normalized()) {
    throw ValidationError("overlap_distance: inputs must have unit norm (tolerance 1e-6)");
  }
  const auto va = a.values();
  const auto vb = b.values();
  const double dot = std::inner_product(va.begin(), va.end(), vb.begin(), 0.0);
  const double d = 0.5 * static_cast<double>(a.size()) * (1.0 - std::abs(dot));
  return d < 0.0 ? 0.0 : d;
}

std::vector<std::size_t> choose_error_sites(std::size_t n, std::size_t e, RandomSource& rng) {
  if (e > n) throw ValidationError("apply_errors: error count exceeds network size");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < e; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(e);
  return idx;
}

SpinConfig flip_sites(const SpinConfig& s, std::span<const std::size_t> sites) {
  std::vector<double> v(s.values().begin(), s.values().end());
  for (std::size_t k : sites) {
    if (k >= v.size()) throw ValidationError("flip_sites: index out of range");
    v[k] = -v[k];
  }
  return SpinConfig(std::move(v));
}

SpinConfig apply_errors(const SpinConfig& s, std::size_t e, RandomSource& rng) {
  require_binary(s, "apply_errors");
  const auto sites = choose_error_sites(s.size(), e, rng);
  return flip_sites(s, sites);
}

std::size_t hamming_distance(const SpinConfig& a, const SpinConfig& b) {
  require_same_size(a.size(), b.size(), "hamming_distance");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] < 0.0) != (b[i] < 0.0);
  return d;
}

}  // namespace glassmem
