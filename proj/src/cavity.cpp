#include "glassmem/cavity.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "glassmem/error.hpp"

namespace glassmem {

namespace {

using cplx = std::complex<double>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// exp(b p) for real p; avoids the special-case handling of the complex exp.
inline cplx expi(cplx b, double p) { return std::polar(std::exp(b.real() * p), b.imag() * p); }

cplx family_root(int k) { return std::polar(1.0, kTwoPi * k / CavityParams::kFamilies); }

}  // namespace

CavityParams::CavityParams() : CavityParams(kDefaultW0, kDefaultSigmaA, 0, -kTwoPi * 2.0e4, kTwoPi * 140.0) {}

CavityParams::CavityParams(double w0, double sigma_A, int eta, double delta_C, double kappa)
    : w0_(w0), sigma_A_(sigma_A), eta_(eta), delta_C_(delta_C), kappa_(kappa) {
  if (!(w0 > 0.0) || !std::isfinite(w0)) throw ValidationError("CavityParams: w0 must be positive");
  if (!(sigma_A > 0.0) || !std::isfinite(sigma_A)) throw ValidationError("CavityParams: sigma_A must be positive");
  if (eta < 0 || eta >= kFamilies) throw ValidationError("CavityParams: eta must lie in [0, 7)");
  if (!std::isfinite(delta_C) || delta_C == 0.0) throw ValidationError("CavityParams: delta_C must be nonzero");
  if (!std::isfinite(kappa) || kappa < 0.0) throw ValidationError("CavityParams: kappa must be >= 0");
  const double a = 2.0 * sigma_A * sigma_A / (w0 * w0);
  gamma_ = (1.0 - a) / (1.0 + a);
}

SitePlan::SitePlan(std::vector<Vec2> sites) : sites_(std::move(sites)) {
  if (sites_.empty()) throw ValidationError("SitePlan: no sites");
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (!std::isfinite(sites_[i].x) || !std::isfinite(sites_[i].y)) {
      throw ValidationError("SitePlan: non-finite coordinate at site " + std::to_string(i));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (sites_[i] == sites_[j]) {
        throw ValidationError("SitePlan: sites " + std::to_string(j) + " and " + std::to_string(i) + " coincide");
      }
    }
  }
}

SitePlan SitePlan::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("SitePlan: malformed JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ValidationError("SitePlan: expected a list of [x, y] pairs");
  std::vector<Vec2> sites;
  for (const auto& item : doc) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_number() || !item[1].is_number()) {
      throw ValidationError("SitePlan: every entry must be an [x, y] pair of numbers");
    }
    sites.push_back({item[0].get<double>(), item[1].get<double>()});
  }
  return SitePlan(std::move(sites));
}

SitePlan SitePlan::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("SitePlan: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string SitePlan::to_json() const {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& s : sites_) doc.push_back({s.x, s.y});
  return doc.dump();
}

cplx mehler_kernel(Vec2 r, Vec2 rp, cplx t, const CavityParams& params) {
  const double g = params.gamma();
  const double w2 = params.w0() * params.w0();
  const cplx denom = 1.0 - g * g * t * t;
  if (std::abs(denom) < 1e-300) throw DomainError("mehler_kernel: singular denominator");
  const cplx pre = (1.0 + g) * (1.0 + g) / (4.0 * denom);
  const cplx arg = -(1.0 + g) / (2.0 * denom) *
                   ((1.0 + g * t * t) * (norm2(r) + norm2(rp)) / w2 - 2.0 * (1.0 + g) * t * dot(r, rp) / w2);
  return pre * std::exp(arg);
}

CouplingKernel::CouplingKernel(const CavityParams& params) : params_(params) {
  const double g = params.gamma();
  const double w2 = params.w0() * params.w0();
  for (std::size_t k = 0; k < kTerms; ++k) {
    const cplx t = family_root(static_cast<int>(k));
    const cplx denom = 1.0 - g * g * t * t;
    const double weight = k == 0 ? 1.0 / CavityParams::kFamilies : 2.0 / CavityParams::kFamilies;
    const cplx phase = std::polar(1.0, -kTwoPi * params.eta() * static_cast<double>(k) / CavityParams::kFamilies);
    c_[k] = params.prefactor() * weight * phase * (1.0 + g) * (1.0 + g) / (4.0 * denom);
    a_[k] = (1.0 + g) * (1.0 + g * t * t) / (2.0 * denom * w2);
    b_[k] = (1.0 + g) * (1.0 + g) * t / (denom * w2);
  }
}

double CouplingKernel::value(Vec2 r, Vec2 rp) const {
  const double s = norm2(r) + norm2(rp);
  const double p = dot(r, rp);
  double out = 0.0;
  for (std::size_t k = 0; k < kTerms; ++k) out += (c_[k] * std::exp(-a_[k] * s + b_[k] * p)).real();
  return out;
}

void CouplingKernel::superpose(std::span<const Vec2> points, std::span<const Vec2> sources,
                               std::span<const double> weights, std::vector<double>& f,
                               std::vector<Vec2>* grad) const {
  if (weights.size() != sources.size()) throw SizeError("one weight per source is required");
  const std::size_t n = points.size();
  const std::size_t m = sources.size();
  f.assign(n, 0.0);
  if (grad) grad->assign(n, Vec2{});
  std::vector<std::array<cplx, kTerms>> src(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double r2 = norm2(sources[j]);
    for (std::size_t k = 0; k < kTerms; ++k) src[j][k] = weights[j] * c_[k] * std::exp(-a_[k] * r2);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 r = points[i];
    std::array<cplx, kTerms> sum{};
    std::array<cplx, kTerms> gx{};
    std::array<cplx, kTerms> gy{};
    for (std::size_t j = 0; j < m; ++j) {
      const double p = dot(r, sources[j]);
      for (std::size_t k = 0; k < kTerms; ++k) {
        const cplx v = src[j][k] * expi(b_[k], p);
        sum[k] += v;
        gx[k] += v * sources[j].x;
        gy[k] += v * sources[j].y;
      }
    }
    Vec2 g;
    for (std::size_t k = 0; k < kTerms; ++k) {
      const cplx site = std::exp(-a_[k] * norm2(r));
      f[i] += (site * sum[k]).real();
      g.x += (site * (-2.0 * a_[k] * r.x * sum[k] + b_[k] * gx[k])).real();
      g.y += (site * (-2.0 * a_[k] * r.y * sum[k] + b_[k] * gy[k])).real();
    }
    if (grad) (*grad)[i] = g;
  }
}

std::pair<Vec2, Vec2> CouplingKernel::gradient(Vec2 r, Vec2 rp) const {
  const double s = norm2(r) + norm2(rp);
  const double p = dot(r, rp);
  Vec2 dr;
  Vec2 drp;
  for (std::size_t k = 0; k < kTerms; ++k) {
    const cplx v = c_[k] * std::exp(-a_[k] * s + b_[k] * p);
    const cplx va = -2.0 * v * a_[k];
    const cplx vb = v * b_[k];
    dr.x += (va * r.x + vb * rp.x).real();
    dr.y += (va * r.y + vb * rp.y).real();
    drp.x += (va * rp.x + vb * r.x).real();
    drp.y += (va * rp.y + vb * r.y).real();
  }
  return {dr, drp};
}

void CouplingKernel::assemble(std::span<const Vec2> positions, std::vector<double>& J,
                              std::vector<Vec2>* grad) const {
  const std::size_t n = positions.size();
  J.assign(n * n, 0.0);
  if (grad) grad->assign(n * n, Vec2{});
  std::vector<std::array<cplx, kTerms>> site(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r2 = norm2(positions[i]);
    for (std::size_t k = 0; k < kTerms; ++k) site[i][k] = std::exp(-a_[k] * r2);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 ri = positions[i];
    for (std::size_t j = i; j < n; ++j) {
      const Vec2 rj = positions[j];
      const double p = dot(ri, rj);
      double value = 0.0;
      Vec2 gi;
      Vec2 gj;
      for (std::size_t k = 0; k < kTerms; ++k) {
        const cplx v = c_[k] * site[i][k] * site[j][k] * expi(b_[k], p);
        value += v.real();
        if (grad) {
          const cplx va = -2.0 * v * a_[k];
          const cplx vb = v * b_[k];
          gi.x += (va * ri.x + vb * rj.x).real();
          gi.y += (va * ri.y + vb * rj.y).real();
          gj.x += (va * rj.x + vb * ri.x).real();
          gj.y += (va * rj.y + vb * ri.y).real();
        }
      }
      J[i * n + j] = value;
      J[j * n + i] = value;
      if (grad) {
        if (i == j) {
          (*grad)[i * n + i] = gi + gj;
        } else {
          (*grad)[i * n + j] = gi;
          (*grad)[j * n + i] = gj;
        }
      }
    }
  }
}

double coupling(Vec2 r, Vec2 rp, const CavityParams& params) { return CouplingKernel(params).value(r, rp); }

std::pair<Vec2, Vec2> grad_coupling(Vec2 r, Vec2 rp, const CavityParams& params) {
  return CouplingKernel(params).gradient(r, rp);
}

CouplingMatrix coupling_matrix(std::span<const Vec2> positions, const CavityParams& params) {
  std::vector<double> entries;
  CouplingKernel(params).assemble(positions, entries);
  return CouplingMatrix(positions.size(), std::move(entries), DiagonalPolicy::Retained);
}

CouplingMatrix coupling_matrix(const SitePlan& plan, const CavityParams& params) {
  return coupling_matrix(plan.sites(), params);
}

double stimulus_field(Vec2 r, const SitePlan& plan, std::span<const double> weights, double amp,
                      const CouplingKernel& kernel) {
  if (weights.size() != plan.size()) throw SizeError("stimulus_field: weights do not match the plan");
  double f = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (weights[i] != 0.0) f += weights[i] * kernel.value(r, plan[i]);
  }
  return amp * f;
}

Vec2 stimulus_gradient(Vec2 r, const SitePlan& plan, std::span<const double> weights, double amp,
                       const CouplingKernel& kernel) {
  if (weights.size() != plan.size()) throw SizeError("stimulus_gradient: weights do not match the plan");
  Vec2 g;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (weights[i] != 0.0) g += weights[i] * kernel.gradient(r, plan[i]).first;
  }
  return amp * g;
}

double stimulus_field(Vec2 r, const SitePlan& plan, const SpinConfig& signs, double amp, double phase,
                      const CavityParams& params) {
  if (signs.size() != plan.size()) throw SizeError("stimulus_field: sign vector does not match the plan");
  if (!signs.is_binary()) throw ValidationError("stimulus_field: signs must be binary");
  const double c = std::cos(phase);
  if (c == 0.0) return 0.0;
  return stimulus_field(r, plan, signs.values(), amp * c, CouplingKernel(params));
}

double largest_eigenvalue(const CouplingMatrix& J) {
  const auto n = static_cast<Eigen::Index>(J.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = J(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("largest_eigenvalue: eigen solver failed");
  return solver.eigenvalues().maxCoeff();
}

namespace {

// Density-smoothed 1D Hermite functions psi_l(sqrt(2) x' / w0) averaged over x' ~ N(x, sigma^2).
std::vector<double> smoothed_hermite(double x, int cutoff, const CavityParams& params) {
  constexpr int kHalf = 400;
  const double sigma = params.sigma_A();
  const double h = 12.0 * sigma / kHalf;
  const double scale = std::numbers::sqrt2 / params.w0();
  std::vector<double> out(static_cast<std::size_t>(cutoff) + 1, 0.0);
  std::vector<double> psi(out.size());
  for (int q = -kHalf; q <= kHalf; ++q) {
    const double d = q * h;
    const double weight = (q == -kHalf || q == kHalf ? 0.5 : 1.0) * h * std::exp(-d * d / (2.0 * sigma * sigma)) /
                          std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
    const double u = scale * (x + d);
    psi[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * u * u);
    if (cutoff >= 1) psi[1] = std::numbers::sqrt2 * u * psi[0];
    for (int l = 1; l < cutoff; ++l) {
      psi[l + 1] = std::sqrt(2.0 / (l + 1)) * u * psi[l] - std::sqrt(static_cast<double>(l) / (l + 1)) * psi[l - 1];
    }
    for (std::size_t l = 0; l < out.size(); ++l) out[l] += weight * psi[l];
  }
  return out;
}

}  // namespace

double mode_sum_coupling(Vec2 r, Vec2 rp, const CavityParams& params, int cutoff) {
  if (cutoff < 0) throw ValidationError("mode_sum_coupling: cutoff must be >= 0");
  const auto ax = smoothed_hermite(r.x, cutoff, params);
  const auto ay = smoothed_hermite(r.y, cutoff, params);
  const auto bx = smoothed_hermite(rp.x, cutoff, params);
  const auto by = smoothed_hermite(rp.y, cutoff, params);
  double total = 0.0;
  for (int l = 0; l <= cutoff; ++l) {
    for (int m = 0; l + m <= cutoff; ++m) {
      if ((l + m) % CavityParams::kFamilies != params.eta()) continue;
      total += ax[l] * ay[m] * bx[l] * by[m];
    }
  }
  return params.prefactor() * std::numbers::pi * total;
}

}  // namespace glassmem
