#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "glassmem/geometry.hpp"
#include "glassmem/spin.hpp"

namespace glassmem {

/// Optical and geometric constants of the multimode cavity. Lengths in micrometres,
/// rates in rad/ms.
class CavityParams {
 public:
  static constexpr double kDefaultW0 = 34.8;
  static constexpr double kDefaultSigmaA = 5.2;
  static constexpr int kFamilies = 7;

  CavityParams();
  CavityParams(double w0, double sigma_A, int eta, double delta_C, double kappa);

  double w0() const noexcept { return w0_; }
  double sigma_A() const noexcept { return sigma_A_; }
  int eta() const noexcept { return eta_; }
  double delta_C() const noexcept { return delta_C_; }
  double kappa() const noexcept { return kappa_; }
  /// (1 - 2 sigma^2/w0^2) / (1 + 2 sigma^2/w0^2).
  double gamma() const noexcept { return gamma_; }
  /// Dispersive factor Delta_C^2 / (Delta_C^2 + kappa^2).
  double prefactor() const noexcept { return delta_C_ * delta_C_ / (delta_C_ * delta_C_ + kappa_ * kappa_); }

 private:
  double w0_;
  double sigma_A_;
  int eta_;
  double delta_C_;
  double kappa_;
  double gamma_;
};

/// Trap centres of the n ensembles.
class SitePlan {
 public:
  explicit SitePlan(std::vector<Vec2> sites);

  std::size_t size() const noexcept { return sites_.size(); }
  const Vec2& operator[](std::size_t i) const { return sites_[i]; }
  std::span<const Vec2> sites() const noexcept { return sites_; }

  /// JSON: a list of [x, y] pairs in micrometres.
  static SitePlan from_json(const std::string& text);
  static SitePlan load(const std::filesystem::path& path);
  std::string to_json() const;

 private:
  std::vector<Vec2> sites_;
};

/// Smoothed Mehler kernel G'(r, r', t). Throws DomainError if 1 - gamma^2 t^2 vanishes.
std::complex<double> mehler_kernel(Vec2 r, Vec2 rp, std::complex<double> t, const CavityParams& params);

/// Evaluates J(r, r') and its gradients with per-family constants computed once.
///
/// The exponent of every kernel term splits as -A_k (r^2 + r'^2) + B_k r.r', so
/// assembling an n x n matrix needs n site factors plus one exponential per pair
/// and family.
class CouplingKernel {
 public:
  explicit CouplingKernel(const CavityParams& params);

  const CavityParams& params() const noexcept { return params_; }

  double value(Vec2 r, Vec2 rp) const;
  /// (dJ/dr, dJ/dr').
  std::pair<Vec2, Vec2> gradient(Vec2 r, Vec2 rp) const;

  /// Matrix J_ij = J(r_i, r_j) (diagonal retained). When `grad` is given it receives
  /// dJ(r_i, r_j)/dr_i at index i*n + j; the derivative with respect to r_j is grad[j*n + i].
  /// For i == j the entry is the derivative of the self coupling J(r_i, r_i).
  void assemble(std::span<const Vec2> positions, std::vector<double>& J, std::vector<Vec2>* grad = nullptr) const;

  /// f_i = sum_j weights_j J(points_i, sources_j). `grad` receives df_i/dpoints_i.
  void superpose(std::span<const Vec2> points, std::span<const Vec2> sources, std::span<const double> weights,
                 std::vector<double>& f, std::vector<Vec2>* grad = nullptr) const;

 private:
  static constexpr std::size_t kTerms = 4;
  CavityParams params_;
  std::array<std::complex<double>, kTerms> c_{};  // weight, phase and normalization
  std::array<std::complex<double>, kTerms> a_{};  // coefficient of -(r^2 + r'^2)
  std::array<std::complex<double>, kTerms> b_{};  // coefficient of r.r'
};

/// J(r, r') including the dispersive prefactor; real by construction.
double coupling(Vec2 r, Vec2 rp, const CavityParams& params);

/// Analytic (dJ/dr, dJ/dr').
std::pair<Vec2, Vec2> grad_coupling(Vec2 r, Vec2 rp, const CavityParams& params);

/// Pairwise couplings at `positions` with the diagonal retained.
CouplingMatrix coupling_matrix(std::span<const Vec2> positions, const CavityParams& params);
CouplingMatrix coupling_matrix(const SitePlan& plan, const CavityParams& params);

/// f(r) = amp * sum_i weights_i J(r, r_i^0).
double stimulus_field(Vec2 r, const SitePlan& plan, std::span<const double> weights, double amp,
                      const CouplingKernel& kernel);
Vec2 stimulus_gradient(Vec2 r, const SitePlan& plan, std::span<const double> weights, double amp,
                       const CouplingKernel& kernel);

/// f(r) = amp cos(phase) sum_i s_i J(r, r_i^0) for a binary sign vector.
double stimulus_field(Vec2 r, const SitePlan& plan, const SpinConfig& signs, double amp, double phase,
                      const CavityParams& params);

/// Largest eigenvalue of a coupling matrix (diagonal included).
double largest_eigenvalue(const CouplingMatrix& J);

/// Independent evaluation of J(r, r') as a truncated sum over Hermite-Gauss modes of the
/// selected family, each mode smoothed by the Gaussian atomic density with trapezoidal
/// quadrature. Modes with l + m <= cutoff are included.
double mode_sum_coupling(Vec2 r, Vec2 rp, const CavityParams& params, int cutoff);

}  // namespace glassmem
