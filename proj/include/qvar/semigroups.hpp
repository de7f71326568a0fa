#pragma once

// Continuous-time families generated by a bounded generator A: T_t = e^{tA},
// continuous averages, t^m d^m/dt^m T_t, grid estimates of the analytic
// semigroup constants, and fractional-power subordination e^{-t(-A)^alpha}.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "qvar/errors.hpp"
#include "qvar/lp_model.hpp"
#include "qvar/spectrum.hpp"
#include "qvar/types.hpp"

namespace qvar {

class GeneratorModel {
 public:
  GeneratorModel(CMatrix a, SpacePtr space) : a_(std::move(a)), space_(std::move(space)) {
    if (!space_) throw InputError("generator has no measure space");
    const auto n = static_cast<Eigen::Index>(space_->size());
    if (a_.rows() != n || a_.cols() != n) throw InputError("generator shape does not match the space");
    if (!a_.allFinite()) throw InputError("generator entries must be finite");
    constexpr double tol = 1e-12;
    markov_ = a_.imag().cwiseAbs().maxCoeff() <= tol && a_.real().rowwise().sum().cwiseAbs().maxCoeff() <= tol;
    for (Eigen::Index i = 0; i < n && markov_; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j && a_(i, j).real() < -tol) { markov_ = false; break; }
      }
    }
  }

  const CMatrix& matrix() const noexcept { return a_; }
  const SpacePtr& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return space_->size(); }
  bool markov_generator() const noexcept { return markov_; }

  MatrixOperator as_operator() const { return MatrixOperator(a_, space_); }
  MatrixOperator wrap(CMatrix m) const { return MatrixOperator(std::move(m), space_); }

 private:
  CMatrix a_;
  SpacePtr space_;
  bool markov_ = false;
};

inline void require_time(double t, bool allow_zero) {
  if (!std::isfinite(t) || t < 0.0 || (!allow_zero && t == 0.0)) {
    throw ParameterError("time must be finite and " + std::string(allow_zero ? "nonnegative" : "positive"));
  }
}

/// T_t = e^{tA} (scaling and squaring with Pade approximants).
inline MatrixOperator evolve(const GeneratorModel& g, double t) {
  require_time(t, true);
  if (t == 0.0) return g.wrap(CMatrix::Identity(g.matrix().rows(), g.matrix().cols()));
  const CMatrix ta = t * g.matrix();
  return g.wrap(ta.exp());
}

/// phi(X) = (e^X - I) X^{-1} = sum_k X^k / (k+1)!, read off the exponential
/// of the block matrix [[X, I], [0, 0]]; stable near X = 0.
inline CMatrix phi1(const CMatrix& x) {
  const Eigen::Index n = x.rows();
  CMatrix big = CMatrix::Zero(2 * n, 2 * n);
  big.topLeftCorner(n, n) = x;
  big.topRightCorner(n, n) = CMatrix::Identity(n, n);
  const CMatrix e = big.exp();
  return e.topRightCorner(n, n);
}

/// M_t(T) = t^{-1} int_0^t T_s ds = phi(tA).
inline MatrixOperator continuous_average(const GeneratorModel& g, double t) {
  require_time(t, false);
  return g.wrap(phi1(t * g.matrix()));
}

/// t^m d^m/dt^m T_t = t^m A^m e^{tA}.
inline MatrixOperator derivative_family(const GeneratorModel& g, double t, int m) {
  require_time(t, false);
  if (m < 0) throw ParameterError("derivative order must be >= 0");
  CMatrix out = evolve(g, t).matrix();
  for (int k = 0; k < m; ++k) out = (t * g.matrix()) * out;
  return g.wrap(std::move(out));
}

/// Logarithmic grid with `per_decade` points per decade on [lo, hi], endpoints included.
inline std::vector<double> log_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0.0 && hi > lo) || per_decade < 1) throw ParameterError("invalid logarithmic grid");
  const double decades = std::log10(hi / lo);
  const int steps = static_cast<int>(std::lround(decades * per_decade));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) out.push_back(lo * std::pow(10.0, decades * k / steps));
  return out;
}

inline std::vector<double> default_time_grid() { return log_grid(1e-3, 1e3, 200); }

struct AnalyticProfile {
  double c0 = 0.0;  // max over the grid of ||T_t||_p (upper bounds)
  double c1 = 0.0;  // max over the grid of ||t A T_t||_p
  double c1_argmax = 0.0;
  std::vector<double> grid;
  std::vector<double> t_a_t;  // ||t A T_t||_p per grid point
};

inline AnalyticProfile analytic_profile(const GeneratorModel& g, double p, std::span<const double> grid) {
  if (grid.empty()) throw ParameterError("time grid must be nonempty");
  const PnormOptions opt{4, 25, 0x5eed};
  AnalyticProfile out;
  out.grid.assign(grid.begin(), grid.end());
  for (double t : grid) {
    require_time(t, false);
    const CMatrix tt = evolve(g, t).matrix();
    out.c0 = std::max(out.c0, operator_pnorm(tt, *g.space(), p, opt).upper);
    const double d = operator_pnorm(t * g.matrix() * tt, *g.space(), p, opt).upper;
    out.t_a_t.push_back(d);
    if (d > out.c1) {
      out.c1 = d;
      out.c1_argmax = t;
    }
  }
  return out;
}

enum class SubordinationMethod { spectral, quadrature };

struct SubordinationSpec {
  double alpha = 0.5;
  double t = 1.0;
  SubordinationMethod method = SubordinationMethod::spectral;
  int quadrature_nodes = 200000;  // node budget for the adaptive rule
};

struct SubordinationResult {
  MatrixOperator op;
  int nodes = 0;            // integrand evaluations (quadrature method)
  double tail_mass = 0.0;   // density mass outside the integration range
  double weight_sum = 1.0;  // sum of the density quadrature weights
};

namespace detail {

struct GaussKronrod15 {
  static constexpr std::array<double, 8> xk{0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wk{0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg{0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                            0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
};

/// Adaptive Gauss-Kronrod integration of a matrix-valued function against
/// a scalar weight on [a, b]. Returns the integral, accumulated weight mass and node count.
template <class Integrand, class Weight>
struct MatrixQuadrature {
  Integrand f;
  Weight w;
  double abs_tol;
  int node_budget;
  int nodes = 0;
  double weight_sum = 0.0;

  CMatrix integrate(double a, double b, Eigen::Index n) {
    CMatrix total = CMatrix::Zero(n, n);
    std::vector<std::pair<double, double>> stack{{a, b}};
    while (!stack.empty()) {
      const auto [lo, hi] = stack.back();
      stack.pop_back();
      CMatrix kron = CMatrix::Zero(n, n), gauss = CMatrix::Zero(n, n);
      double mass = 0.0;
      const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
      auto add = [&](std::size_t idx, double x) {
        const double u = c + h * x;
        const double weight = w(u);
        const CMatrix val = weight * f(u);
        kron += GaussKronrod15::wk[idx] * val;
        mass += GaussKronrod15::wk[idx] * weight;
        if (idx % 2 == 1) gauss += GaussKronrod15::wg[idx / 2] * val;
        ++nodes;
      };
      add(7, 0.0);
      for (std::size_t idx = 0; idx < 7; ++idx) {
        add(idx, -GaussKronrod15::xk[idx]);
        add(idx, GaussKronrod15::xk[idx]);
      }
      kron *= h;
      gauss *= h;
      mass *= h;
      const double err = (kron - gauss).cwiseAbs().maxCoeff();
      if (err <= abs_tol * (hi - lo) / (b - a) || nodes >= node_budget || hi - lo < 1e-12 * (b - a)) {
        total += kron;
        weight_sum += mass;
      } else {
        stack.push_back({c, hi});
        stack.push_back({lo, c});
      }
    }
    return total;
  }
};

}  // namespace detail

/// e^{-t(-A)^alpha}: spectral calculus (principal branch), or for alpha = 1/2
/// the average of T_s against the one-sided stable density
/// f(s) = t (4 pi)^{-1/2} s^{-3/2} exp(-t^2/(4s)).
inline SubordinationResult subordinate(const GeneratorModel& g, const SubordinationSpec& spec) {
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  require_time(spec.t, false);
  const MatrixOperator a_op = g.as_operator();
  const double scale = std::max(1.0, detail::spectral_norm(g.matrix()));
  {
    Eigen::ComplexEigenSolver<CMatrix> es(g.matrix(), false);
    if (es.eigenvalues().real().maxCoeff() > 1e-9 * scale) {
      throw PreconditionError("generator has spectrum in the open right half-plane");
    }
  }
  const Eigen::Index n = g.matrix().rows();

  if (spec.method == SubordinationMethod::spectral) {
    const double alpha = spec.alpha, t = spec.t;
    CMatrix m = spectral_function(a_op, [&](Complex z) {
      if (std::abs(z) <= 1e-14 * scale) return Complex(1.0);
      return std::exp(-t * std::pow(-z, alpha));
    });
    return {g.wrap(std::move(m)), 0, 0.0, 1.0};
  }

  if (spec.alpha != 0.5) {
    throw PreconditionError("quadrature subordination is available for alpha = 1/2 only");
  }
  // Substituting u = t / (2 sqrt(s)) turns f(s) ds into (2/sqrt(pi)) e^{-u^2} du
  // with s = t^2 / (4u^2); truncating at u = U drops exactly erfc(U) of the mass.
  // Small u means huge s, where e^{sA} cannot be formed accurately. With P the
  // projection onto N(A) along R(A) and A' = A - P, e^{sA} = e^{sA'} + (1 - e^{-s}) P
  // and e^{sA'} decays, so only the decaying part is integrated numerically.
  double upper = 4.0;
  while (std::erfc(upper) >= 1e-11) upper += 0.05;
  const double t = spec.t;
  const CMatrix proj = detail::kernel_projection(g.matrix());
  const CMatrix shifted = g.matrix() - proj;
  auto integrand = [&](double u) -> CMatrix {
    const double s = t * t / (4.0 * u * u);
    const CMatrix sa = s * shifted;
    return CMatrix(sa.exp()) - std::exp(-s) * proj;
  };
  auto density = [](double u) { return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-u * u); };
  detail::MatrixQuadrature<decltype(integrand), decltype(density)> quad{integrand, density, 1e-13,
                                                                        spec.quadrature_nodes};
  CMatrix m = quad.integrate(0.0, upper, n) + proj;
  return {g.wrap(std::move(m)), quad.nodes, std::erfc(upper), quad.weight_sum};
}

}  // namespace qvar
