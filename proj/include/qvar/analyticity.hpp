#pragma once

// Numerical diagnostics for power-bounded analytic (Ritt) operators:
// difference profiles n ||T^n - T^{n-1}||, sampled resolvent bounds outside the
// unit disc, Stolz-domain containment of the spectrum and of the numerical
// range, and the Fourier criterion for convolution operators.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "qvar/errors.hpp"
#include "qvar/lp_model.hpp"
#include "qvar/spectrum.hpp"
#include "qvar/types.hpp"

namespace qvar {

/// Stolz-type domain B_gamma: convex hull of 1 and the closed disc of radius sin(gamma).
class StolzDomain {
 public:
  explicit StolzDomain(double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0 && gamma < std::numbers::pi / 2)) {
      throw ParameterError("Stolz angle gamma must lie in (0, pi/2)");
    }
  }

  double gamma() const noexcept { return gamma_; }
  double radius() const noexcept { return std::sin(gamma_); }

  /// Support function h(theta) = max(cos theta, sin gamma).
  double support(double theta) const { return std::max(std::cos(theta), radius()); }

  /// Exact membership: sup_theta [Re(z e^{-i theta}) - h(theta)] <= tol.
  /// On |theta| <= arccos(sin gamma) the slack is Re((z-1) e^{-i theta}); elsewhere
  /// it is Re(z e^{-i theta}) - sin gamma. Both are sinusoids maximized in closed form.
  bool contains(Complex z, double tol = 1e-12) const { return excess(z) <= tol; }

  double excess(Complex z) const {
    const double s = radius();
    const double edge = std::acos(s);
    const double pi = std::numbers::pi;
    double worst = max_sinusoid(z - 1.0, -edge, edge);
    worst = std::max(worst, max_sinusoid(z, edge, 2.0 * pi - edge) - s);
    return worst;
  }

 private:
  // max over theta in [lo, hi] of Re(w e^{-i theta}) = |w| cos(theta - arg w).
  static double max_sinusoid(Complex w, double lo, double hi) {
    const double r = std::abs(w);
    if (r == 0.0) return 0.0;
    const double phase = std::arg(w);
    const double two_pi = 2.0 * std::numbers::pi;
    double shifted = phase;
    while (shifted < lo) shifted += two_pi;
    while (shifted - two_pi >= lo) shifted -= two_pi;
    if (shifted <= hi) return r;
    return std::max(r * std::cos(lo - phase), r * std::cos(hi - phase));
  }

  double gamma_;
};

struct DiffProfile {
  std::vector<double> upper;  // n * upper(||T^n - T^{n-1}||_p), n = 1..N
  std::vector<double> lower;
  NormEstimate power_bound;   // sup_{0 <= n <= N} ||T^n||_p
};

inline PnormOptions light_pnorm_options() {
  PnormOptions o;
  o.random_starts = 4;
  o.ascent_iterations = 25;
  return o;
}

/// n ||T^n - T^{n-1}||_p for n = 1..N with incrementally accumulated powers.
inline DiffProfile diff_profile(const MatrixOperator& t, double p, long n_max) {
  if (n_max < 1 || n_max > 100000) throw ParameterError("profile length must lie in 1..1e5");
  const double rho = spectral_radius(t.matrix());
  if (rho > 1.0 + 1e-9) {
    throw DivergenceError("spectral radius " + std::to_string(rho) + " exceeds 1; powers diverge");
  }
  const PnormOptions opt = light_pnorm_options();
  DiffProfile out;
  out.upper.reserve(static_cast<std::size_t>(n_max));
  out.lower.reserve(static_cast<std::size_t>(n_max));
  const CMatrix& m = t.matrix();
  CMatrix prev = CMatrix::Identity(m.rows(), m.cols());
  out.power_bound = NormEstimate::exact_value(1.0);
  for (long n = 1; n <= n_max; ++n) {
    CMatrix cur = prev * m;
    const NormEstimate d = operator_pnorm(cur - prev, *t.space(), p, opt);
    out.upper.push_back(static_cast<double>(n) * d.upper);
    out.lower.push_back(static_cast<double>(n) * d.lower);
    const NormEstimate pw = operator_pnorm(cur, *t.space(), p, opt);
    out.power_bound.upper = std::max(out.power_bound.upper, pw.upper);
    out.power_bound.lower = std::max(out.power_bound.lower, pw.lower);
    out.power_bound.exact = out.power_bound.exact && pw.exact;
    prev = std::move(cur);
  }
  return out;
}

/// max over eigenvalues of n |lambda|^{n-1} |1 - lambda|: the exact p = 2
/// difference profile of a normal operator.
inline std::vector<double> normal_spectral_diff_formula(const MatrixOperator& t, long n_max) {
  if (t.normality_defect() > kNormalityTolerance) {
    throw PreconditionError("spectral difference formula needs a normal operator (defect " +
                            std::to_string(t.normality_defect()) + ")");
  }
  const Spectrum sp = spectrum(t);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_max));
  for (long n = 1; n <= n_max; ++n) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < sp.eigenvalues.size(); ++i) {
      const Complex z = sp.eigenvalues[i];
      const double r = std::abs(z);
      const double rn = n == 1 ? 1.0 : std::pow(r, static_cast<double>(n - 1));
      best = std::max(best, static_cast<double>(n) * rn * std::abs(1.0 - z));
    }
    out.push_back(best);
  }
  return out;
}

struct RittEstimate {
  NormEstimate sup;  // grid maximum of |z-1| ||(zI - T)^{-1}||_p; a lower estimate of the true sup
  Complex argmax{0.0, 0.0};
  std::vector<double> radii;
  int angles_per_radius = 0;
};

inline RittEstimate ritt_resolvent_sup(const MatrixOperator& t, double p, std::span<const double> radii,
                                       int angles_per_radius) {
  if (radii.empty() || angles_per_radius < 1) throw ParameterError("resolvent grid is empty");
  for (double r : radii) {
    if (!(r > 1.0)) throw ParameterError("resolvent radii must exceed 1");
  }
  const double rho = spectral_radius(t.matrix());
  if (rho > 1.0 + 1e-9) {
    throw PreconditionError("resolvent condition needs spectral radius <= 1 (got " + std::to_string(rho) + ")");
  }
  const PnormOptions opt = light_pnorm_options();
  RittEstimate out;
  out.radii.assign(radii.begin(), radii.end());
  out.angles_per_radius = angles_per_radius;
  out.sup = {0.0, 0.0, std::isinf(p) || p == 1.0 || p == 2.0};
  const CMatrix id = CMatrix::Identity(t.matrix().rows(), t.matrix().cols());
  for (double r : radii) {
    for (int k = 0; k < angles_per_radius; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / angles_per_radius;
      const Complex z = std::polar(r, theta);
      Eigen::PartialPivLU<CMatrix> lu(z * id - t.matrix());
      if (!(std::abs(lu.determinant()) > 0.0)) {
        throw NumericError("zI - T is singular on the resolvent grid");
      }
      const CMatrix res = lu.inverse();
      if (!res.allFinite()) throw NumericError("resolvent overflow on the grid");
      const NormEstimate n = operator_pnorm(res, *t.space(), p, opt);
      const double scale = std::abs(z - 1.0);
      if (scale * n.upper > out.sup.upper) {
        out.sup.upper = scale * n.upper;
        out.argmax = z;
      }
      out.sup.lower = std::max(out.sup.lower, scale * n.lower);
    }
  }
  return out;
}

struct StolzResult {
  double k_min = 0.0;                 // max |1-lambda|/(1-|lambda|) over lambda != 1; may be infinite
  std::optional<double> gamma_min;    // smallest gamma with sigma(T) inside B_gamma
  bool trivial = false;               // every eigenvalue equals 1 (empty maximum)
};

inline constexpr double kUnitEigenvalueTolerance = 1e-10;

/// Stolz constants of a list of eigenvalues.
inline StolzResult stolz_constants(const CVector& eigenvalues) {
  StolzResult out;
  out.trivial = true;
  bool peripheral = false;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const Complex z = eigenvalues[i];
    if (std::abs(z - 1.0) <= kUnitEigenvalueTolerance) continue;
    out.trivial = false;
    const double r = std::abs(z);
    if (r >= 1.0 - 1e-12) {
      peripheral = true;
      out.k_min = kInf;
      continue;
    }
    out.k_min = std::max(out.k_min, std::abs(1.0 - z) / (1.0 - r));
  }
  if (out.trivial) {
    out.gamma_min = 0.0;
    return out;
  }
  if (peripheral) return out;

  auto all_inside = [&](double gamma) {
    const StolzDomain dom(gamma);
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
      const Complex z = eigenvalues[i];
      if (std::abs(z - 1.0) <= kUnitEigenvalueTolerance) continue;
      if (!dom.contains(z)) return false;
    }
    return true;
  };
  double lo = 0.0, hi = std::numbers::pi / 2;
  for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (all_inside(mid) ? hi : lo) = mid;
  }
  if (hi < std::numbers::pi / 2) out.gamma_min = hi;
  return out;
}

inline StolzResult stolz_spectrum_check(const MatrixOperator& t) {
  const Spectrum sp = spectrum(t);
  if (!sp.trustworthy) {
    throw DegeneracyError("eigenproblem is too ill-conditioned (eigenvector condition " +
                          std::to_string(sp.eigenvector_condition) + ")");
  }
  return stolz_constants(sp.eigenvalues);
}

/// h_W(theta) = largest eigenvalue of the Hermitian part of e^{-i theta} T
/// in the weighted inner product.
inline double numerical_range_support(const MatrixOperator& t, double theta) {
  const CMatrix b = detail::unweighted_form(t.matrix(), t.space()->weights(), 2.0);
  const CMatrix rot = std::polar(1.0, -theta) * b;
  const CMatrix herm = 0.5 * (rot + rot.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("Hermitian eigensolver failed");
  return es.eigenvalues().maxCoeff();
}

struct NumericalRangeResult {
  bool contained = false;
  double margin = 0.0;  // min over the grid of h_B(theta) - h_W(theta)
  int grid_points = 0;
};

inline NumericalRangeResult numerical_range_check(const MatrixOperator& t, double gamma, int grid_points = 720) {
  if (grid_points < 360) throw ParameterError("numerical range grid needs at least 360 angles");
  const StolzDomain dom(gamma);
  NumericalRangeResult out;
  out.grid_points = grid_points;
  out.margin = kInf;
  for (int k = 0; k < grid_points; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / grid_points;
    out.margin = std::min(out.margin, dom.support(theta) - numerical_range_support(t, theta));
  }
  out.contained = out.margin >= -1e-10;
  return out;
}

struct ConvolutionCriterion {
  double k_min = 0.0;
  std::vector<Complex> symbol;  // nu-hat(s), s = 0..N-1
};

/// Stolz constant of the circulant x -> nu * x on Z_N from its Fourier symbol.
inline ConvolutionCriterion convolution_criterion(std::span<const double> nu) {
  if (nu.empty()) throw InputError("kernel must be nonempty");
  double total = 0.0;
  for (double v : nu) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("kernel entries must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InputError("kernel must sum to 1");
  const std::size_t n = nu.size();
  ConvolutionCriterion out;
  out.symbol.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    Complex acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += nu[k] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((k * s) % n) /
                                          static_cast<double>(n));
    }
    out.symbol[s] = acc;
  }
  out.k_min = stolz_constants(Eigen::Map<const CVector>(out.symbol.data(), static_cast<Eigen::Index>(n))).k_min;
  return out;
}

enum class AnalyticityVerdict { analytic, not_analytic, inconclusive };

inline const char* to_string(AnalyticityVerdict v) {
  switch (v) {
    case AnalyticityVerdict::analytic: return "analytic";
    case AnalyticityVerdict::not_analytic: return "not_analytic";
    default: return "inconclusive";
  }
}

struct AnalyticityReport {
  DiffProfile profile;
  RittEstimate ritt;
  std::optional<StolzResult> stolz;  // empty when the eigenproblem is untrustworthy
  bool profile_bounded = false;
  AnalyticityVerdict verdict = AnalyticityVerdict::inconclusive;
};

struct AnalyticityGrid {
  std::vector<double> radii{2.0, 1.5, 1.1, 1.01, 1.001};
  int angles_per_radius = 256;
};

/// Profile growth test over n = 1..N: bounded when N >= 32 and the last-quartile
/// maximum is at most 1.05 times the first-quartile maximum.
inline bool profile_is_bounded(std::span<const double> profile) {
  const std::size_t n = profile.size();
  if (n < 32) return false;
  const std::size_t q = n / 4;
  const double first = *std::max_element(profile.begin(), profile.begin() + static_cast<long>(q));
  const double last = *std::max_element(profile.end() - static_cast<long>(q), profile.end());
  return last <= 1.05 * first;
}

inline AnalyticityReport analyze(const MatrixOperator& t, double p, long n_max,
                                 const AnalyticityGrid& grid = {}) {
  AnalyticityReport rep;
  rep.profile = diff_profile(t, p, n_max);
  rep.ritt = ritt_resolvent_sup(t, p, grid.radii, grid.angles_per_radius);
  const Spectrum sp = spectrum(t);
  if (sp.trustworthy) rep.stolz = stolz_constants(sp.eigenvalues);
  rep.profile_bounded = profile_is_bounded(rep.profile.upper);

  // Non-decaying differences: ||T^n - T^{n-1}|| stays away from 0 over the last quartile.
  bool persistent = false;
  const auto& up = rep.profile.upper;
  if (up.size() >= 32) {
    persistent = true;
    for (std::size_t i = up.size() - up.size() / 4; i < up.size(); ++i) {
      persistent = persistent && up[i] / static_cast<double>(i + 1) >= 1e-2;
    }
  }
  const bool k_infinite = rep.stolz && std::isinf(rep.stolz->k_min);
  if (k_infinite || (!rep.profile_bounded && persistent)) {
    rep.verdict = AnalyticityVerdict::not_analytic;
  } else if (rep.profile_bounded && (!rep.stolz || std::isfinite(rep.stolz->k_min))) {
    rep.verdict = AnalyticityVerdict::analytic;
  } else {
    rep.verdict = AnalyticityVerdict::inconclusive;
  }
  return rep;
}

}  // namespace qvar
