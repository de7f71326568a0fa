#pragma once

// Finite weighted L^p spaces and dense operators acting on them.
//
// All adjoints, singular values and normality defects use the weighted inner
// product <x, y> = sum_i mu_i x_i conj(y_i). With D = diag(mu), the operator
// T on L^p(mu) is isometrically similar to D^{1/p} T D^{-1/p} on unweighted
// l^p, which is how every p-norm below is evaluated.

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "qvar/errors.hpp"
#include "qvar/types.hpp"
#include "qvar/variation.hpp"

namespace qvar {

class MeasureSpace {
 public:
  explicit MeasureSpace(std::vector<double> weights) : weights_(weights.size()) {
    if (weights.empty()) throw InputError("measure space needs at least one atom");
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
        throw InputError("atom weight " + std::to_string(i) + " must be positive and finite");
      }
      weights_[static_cast<Eigen::Index>(i)] = weights[i];
    }
  }

  /// N atoms of mass 1/N.
  static std::shared_ptr<const MeasureSpace> uniform(std::size_t n) {
    if (n == 0) throw InputError("measure space needs at least one atom");
    return std::make_shared<const MeasureSpace>(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
  const RVector& weights() const noexcept { return weights_; }
  double total_mass() const { return weights_.sum(); }
  bool is_uniform() const {
    return (weights_.array() == weights_[0]).all();
  }

  bool operator==(const MeasureSpace& other) const {
    return weights_.size() == other.weights_.size() && weights_ == other.weights_;
  }

 private:
  RVector weights_;
};

using SpacePtr = std::shared_ptr<const MeasureSpace>;

namespace detail {

/// ||x||_p for a vector of moduli-able entries against weights; p may be 1 or infinity.
template <class Derived>
double weighted_lp(const Eigen::MatrixBase<Derived>& x, const RVector& w, double p) {
  const auto mod = x.cwiseAbs();
  if (std::isinf(p)) return mod.size() ? mod.maxCoeff() : 0.0;
  if (p == 1.0) return w.dot(mod);
  if (p == 2.0) return std::sqrt(w.dot(mod.cwiseAbs2()));
  return std::pow(w.dot(mod.array().pow(p).matrix()), 1.0 / p);
}

/// D^{1/p} T D^{-1/p}: the unweighted representative of T on L^p(mu).
inline CMatrix unweighted_form(const CMatrix& t, const RVector& w, double p) {
  if (std::isinf(p)) return t;
  const RVector left = w.array().pow(1.0 / p);
  const RVector right = w.array().pow(-1.0 / p);
  return left.asDiagonal() * t * right.asDiagonal();
}

inline double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  // BDCSVD runs Jacobi sweeps below its block size, divide and conquer above.
  Eigen::BDCSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace detail

class LpVector {
 public:
  LpVector(CVector entries, SpacePtr space) : entries_(std::move(entries)), space_(std::move(space)) {
    if (!space_) throw InputError("vector has no measure space");
    if (static_cast<std::size_t>(entries_.size()) != space_->size()) {
      throw InputError("vector length " + std::to_string(entries_.size()) +
                       " does not match space size " + std::to_string(space_->size()));
    }
    if (!entries_.allFinite()) throw InputError("vector entries must be finite");
  }

  const CVector& entries() const noexcept { return entries_; }
  const SpacePtr& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.size()); }

 private:
  CVector entries_;
  SpacePtr space_;
};

/// Interval enclosing an operator norm; exact when both ends coincide.
struct NormEstimate {
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;

  static NormEstimate exact_value(double v) { return {v, v, true}; }
};

/// Dense complex operator on L^p(mu) with cached structural flags.
class MatrixOperator {
 public:
  MatrixOperator(CMatrix matrix, SpacePtr space) : matrix_(std::move(matrix)), space_(std::move(space)) {
    if (!space_) throw InputError("operator has no measure space");
    const auto n = static_cast<Eigen::Index>(space_->size());
    if (matrix_.rows() != n || matrix_.cols() != n) {
      throw InputError("operator is " + std::to_string(matrix_.rows()) + "x" +
                       std::to_string(matrix_.cols()) + " but the space has " +
                       std::to_string(n) + " atoms");
    }
    if (!matrix_.allFinite()) throw InputError("operator entries must be finite");
    compute_flags();
  }

  const CMatrix& matrix() const noexcept { return matrix_; }
  const SpacePtr& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return space_->size(); }

  bool nonnegative_entries() const noexcept { return nonnegative_; }
  bool row_stochastic() const noexcept { return row_stochastic_; }
  double normality_defect() const noexcept { return normality_defect_; }
  bool is_real() const noexcept { return real_; }

  /// Adjoint in the weighted inner product: D^{-1} T^H D.
  CMatrix adjoint() const {
    const RVector& w = space_->weights();
    return w.cwiseInverse().asDiagonal() * matrix_.adjoint() * w.asDiagonal();
  }

  LpVector apply(const LpVector& x) const {
    if (!(*x.space() == *space_)) throw InputError("vector and operator live on different spaces");
    return LpVector(matrix_ * x.entries(), space_);
  }

  MatrixOperator with_matrix(CMatrix m) const { return MatrixOperator(std::move(m), space_); }

 private:
  void compute_flags() {
    constexpr double tol = 1e-12;
    real_ = matrix_.imag().cwiseAbs().maxCoeff() == 0.0;
    nonnegative_ = matrix_.real().minCoeff() >= -tol && matrix_.imag().cwiseAbs().maxCoeff() <= tol;
    row_stochastic_ = nonnegative_ &&
                      (matrix_.real().rowwise().sum().array() - 1.0).abs().maxCoeff() <= tol;
    const CMatrix b = detail::unweighted_form(matrix_, space_->weights(), 2.0);
    normality_defect_ = detail::spectral_norm(b.adjoint() * b - b * b.adjoint());
  }

  CMatrix matrix_;
  SpacePtr space_;
  bool nonnegative_ = false;
  bool row_stochastic_ = false;
  bool real_ = false;
  double normality_defect_ = 0.0;
};

inline double lp_norm(const LpVector& x, double p) {
  if (!(p >= 1.0)) throw ParameterError("L^p exponent must be >= 1");
  return detail::weighted_lp(x.entries(), x.space()->weights(), p);
}

/// L^p(Omega; v^q_m) norm of the trajectory (x_0, ..., x_m): the L^p norm over
/// atoms of the pointwise strong q-variation.
inline double bochner_variation_norm(std::span<const LpVector> samples, double p, VariationExponent q) {
  if (samples.empty()) throw InputError("trajectory must contain at least one sample");
  if (!(p >= 1.0)) throw ParameterError("L^p exponent must be >= 1");
  const SpacePtr& space = samples.front().space();
  for (const auto& s : samples) {
    if (!(*s.space() == *space)) throw InputError("trajectory samples live on different spaces");
  }
  const std::size_t n = space->size();
  RVector pointwise(static_cast<Eigen::Index>(n));
  std::vector<Complex> traj(samples.size());
  for (std::size_t atom = 0; atom < n; ++atom) {
    for (std::size_t k = 0; k < samples.size(); ++k) traj[k] = samples[k].entries()[static_cast<Eigen::Index>(atom)];
    pointwise[static_cast<Eigen::Index>(atom)] = vq_norm(ScalarSequence(traj), q);
  }
  return detail::weighted_lp(pointwise, space->weights(), p);
}

struct PnormOptions {
  int random_starts = 16;
  int ascent_iterations = 50;
  std::uint64_t seed = 0x5eed;
};

namespace detail {

/// p-norm power iteration (Boyd) from one start; returns ||Bx||_p / ||x||_p of the final iterate.
inline double pnorm_ascent(const CMatrix& b, CVector x, double p, int iterations) {
  const double pd = p / (p - 1.0);
  auto dual = [](const CVector& y, double r) {
    // Vector z with ||z||_{r'} = 1 and <y, z> = ||y||_r.
    CVector z(y.size());
    const double norm = std::pow(y.cwiseAbs().array().pow(r).sum(), 1.0 / r);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double a = std::abs(y[i]);
      z[i] = a == 0.0 ? Complex(0.0) : (y[i] / a) * std::pow(a / norm, r - 1.0);
    }
    return z;
  };
  auto ratio = [&](const CVector& v) {
    const double den = std::pow(v.cwiseAbs().array().pow(p).sum(), 1.0 / p);
    return den == 0.0 ? 0.0 : std::pow((b * v).cwiseAbs().array().pow(p).sum(), 1.0 / p) / den;
  };
  double best = ratio(x);
  for (int it = 0; it < iterations; ++it) {
    const CVector y = b * x;
    if (y.cwiseAbs().maxCoeff() == 0.0) break;
    const CVector z = b.adjoint() * dual(y, p);
    if (z.cwiseAbs().maxCoeff() == 0.0) break;
    x = dual(z, pd);
    const double r = ratio(x);
    if (r <= best * (1.0 + 1e-13)) {
      best = std::max(best, r);
      break;
    }
    best = r;
  }
  return best;
}

inline double norm_1(const CMatrix& t, const RVector& w) {
  // max_j (sum_i mu_i |t_ij|) / mu_j
  double best = 0.0;
  for (Eigen::Index j = 0; j < t.cols(); ++j) best = std::max(best, w.dot(t.col(j).cwiseAbs()) / w[j]);
  return best;
}

inline double norm_inf(const CMatrix& t) {
  return t.rows() ? t.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
}

}  // namespace detail

/// ||T||_{p->p} on L^p(mu). Exact for p in {1, 2, inf}; otherwise a certified
/// interval: Riesz-Thorin upper bound and sampled p-power-iteration lower bound.
inline NormEstimate operator_pnorm(const CMatrix& t, const MeasureSpace& space, double p,
                                   const PnormOptions& opt = {}) {
  if (!(p >= 1.0)) throw ParameterError("operator norm exponent must be >= 1");
  const RVector& w = space.weights();
  if (std::isinf(p)) return NormEstimate::exact_value(detail::norm_inf(t));
  if (p == 1.0) return NormEstimate::exact_value(detail::norm_1(t, w));
  const double two = detail::spectral_norm(detail::unweighted_form(t, w, 2.0));
  if (p == 2.0) return NormEstimate::exact_value(two);

  const double one = detail::norm_1(t, w);
  const double inf = detail::norm_inf(t);
  // Riesz-Thorin: 1/p = (1-theta)/p0 + theta/p1.
  double upper = std::pow(one, 1.0 / p) * std::pow(inf, 1.0 - 1.0 / p);
  if (p < 2.0) {
    const double theta = 2.0 - 2.0 / p;
    upper = std::min(upper, std::pow(one, 1.0 - theta) * std::pow(two, theta));
  } else {
    const double theta = 2.0 / p;
    upper = std::min(upper, std::pow(two, theta) * std::pow(inf, 1.0 - theta));
  }

  const CMatrix b = detail::unweighted_form(t, w, p);
  const Eigen::Index n = b.cols();
  double lower = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    lower = std::max(lower, detail::pnorm_ascent(b, CVector::Unit(n, j), p, opt.ascent_iterations));
  }
  lower = std::max(lower, detail::pnorm_ascent(b, CVector::Ones(n), p, opt.ascent_iterations));
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  for (int s = 0; s < opt.random_starts; ++s) {
    CVector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = Complex(gauss(rng), gauss(rng));
    lower = std::max(lower, detail::pnorm_ascent(b, x, p, opt.ascent_iterations));
  }
  lower = std::min(lower, upper);
  return {lower, upper, upper - lower <= 1e-9};
}

inline NormEstimate operator_pnorm(const MatrixOperator& t, double p, const PnormOptions& opt = {}) {
  return operator_pnorm(t.matrix(), *t.space(), p, opt);
}

/// Entrywise modulus |T|, the smallest positive operator dominating T.
inline MatrixOperator modulus_operator(const MatrixOperator& t) {
  return t.with_matrix(t.matrix().cwiseAbs().cast<Complex>());
}

/// Regular norm ||T||_r = || |T| ||_{p->p}.
inline NormEstimate regular_norm(const MatrixOperator& t, double p, const PnormOptions& opt = {}) {
  return operator_pnorm(modulus_operator(t), p, opt);
}

inline CMatrix matrix_power(const CMatrix& t, long n) {
  CMatrix r = CMatrix::Identity(t.rows(), t.cols());
  for (long k = 0; k < n; ++k) r = r * t;
  return r;
}

/// M_n(T) = (n+1)^{-1} sum_{k=0}^n T^k, by accumulation of powers.
inline MatrixOperator ergodic_average(const MatrixOperator& t, long n) {
  if (n < 0) throw ParameterError("ergodic average index must be >= 0");
  const CMatrix& m = t.matrix();
  CMatrix power = CMatrix::Identity(m.rows(), m.cols());
  CMatrix sum = power;
  for (long k = 1; k <= n; ++k) {
    power = power * m;
    sum += power;
  }
  return t.with_matrix(sum / static_cast<double>(n + 1));
}

/// Delta_n^m = T^n (T - I)^m for m >= 0, and Delta_n^{-1} = sum_{j<n} T^j.
inline CMatrix difference_matrix(const CMatrix& t, long n, long m) {
  if (m < -1) throw ParameterError("difference order must be >= -1");
  if (n < 0 || (m == -1 && n < 1)) {
    throw ParameterError("difference index n=" + std::to_string(n) + " invalid for order m=" +
                         std::to_string(m));
  }
  const CMatrix id = CMatrix::Identity(t.rows(), t.cols());
  if (m == -1) {
    CMatrix power = id, sum = CMatrix::Zero(t.rows(), t.cols());
    for (long j = 0; j < n; ++j) {
      sum += power;
      power = power * t;
    }
    return sum;
  }
  return matrix_power(t, n) * matrix_power(t - id, m);
}

inline MatrixOperator difference_operator(const MatrixOperator& t, long n, long m) {
  return t.with_matrix(difference_matrix(t.matrix(), n, m));
}

struct ProjectionResult {
  MatrixOperator projection;
  double residual;        // ||M_n(T) - P||_2 at n = residual_index
  long residual_index;
};

namespace detail {

/// Projection onto N(K) along R(K), via null spaces of K and K^H.
/// Throws if the null spaces pair degenerately (a Jordan block at 0).
inline CMatrix kernel_projection(const CMatrix& k, double tol = 1e-9) {
  const Eigen::Index n = k.rows();
  Eigen::JacobiSVD<CMatrix> svd(k, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RVector& s = svd.singularValues();
  const double scale = std::max(1.0, s.size() ? s(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > tol * scale) ++rank;
  const Eigen::Index null_dim = n - rank;
  if (null_dim == 0) return CMatrix::Zero(n, n);
  const CMatrix v = svd.matrixV().rightCols(null_dim);  // right null space of K
  const CMatrix u = svd.matrixU().rightCols(null_dim);  // left null space: annihilates R(K)
  const CMatrix gram = u.adjoint() * v;
  Eigen::JacobiSVD<CMatrix> gsvd(gram);
  const RVector& gs = gsvd.singularValues();
  if (gs(gs.size() - 1) < 1e-8) {
    throw DegeneracyError("null space of the operator is defective (nontrivial Jordan block)");
  }
  return v * gram.inverse() * u.adjoint();
}

inline double weighted_two_norm(const CMatrix& m, const MeasureSpace& space) {
  return spectral_norm(unweighted_form(m, space.weights(), 2.0));
}

}  // namespace detail

/// Mean ergodic projection P_T onto N(I - T) along R(I - T). The Cesaro
/// residual ||M_n(T) - P||_2 is reported as a cross-check.
inline ProjectionResult mean_ergodic_projection(const MatrixOperator& t, long residual_index = 1024) {
  const CMatrix& m = t.matrix();
  const double two = detail::weighted_two_norm(m, *t.space());
  if (two > 1.0 + 1e-9) {
    Eigen::ComplexEigenSolver<CMatrix> es(m, false);
    if (es.eigenvalues().cwiseAbs().maxCoeff() > 1.0 + 1e-9) {
      throw PreconditionError("mean ergodic projection needs a contraction or spectral radius <= 1");
    }
  }
  const CMatrix id = CMatrix::Identity(m.rows(), m.cols());
  const CMatrix p = detail::kernel_projection(id - m);
  if (detail::weighted_two_norm(p * p - p, *t.space()) > 1e-9 * std::max(1.0, detail::spectral_norm(p))) {
    throw DegeneracyError("computed mean ergodic projection is not idempotent");
  }
  const double residual =
      detail::weighted_two_norm(ergodic_average(t, residual_index).matrix() - p, *t.space());
  return {t.with_matrix(p), residual, residual_index};
}

}  // namespace qvar
