#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qvar/errors.hpp"
#include "qvar/lp_model.hpp"
#include "qvar/types.hpp"

namespace qvar {

/// Eigenvalues of an operator plus a flag telling whether they can be trusted.
struct Spectrum {
  CVector eigenvalues;
  double eigenvector_condition = 1.0;  // 1 on the normal (Schur) path
  bool normal = false;
  bool trustworthy = false;
};

inline constexpr double kEigenvectorConditionLimit = 1e8;
inline constexpr double kNormalityTolerance = 1e-8;

namespace detail {

inline bool is_normal(const MatrixOperator& t) {
  const double scale = std::max(1.0, detail::spectral_norm(t.matrix()));
  return t.normality_defect() <= kNormalityTolerance * scale * scale;
}

inline double condition_number(const CMatrix& v) {
  Eigen::JacobiSVD<CMatrix> svd(v);
  const RVector& s = svd.singularValues();
  const double smallest = s(s.size() - 1);
  return smallest == 0.0 ? kInf : s(0) / smallest;
}

}  // namespace detail

inline Spectrum spectrum(const MatrixOperator& t) {
  Spectrum out;
  out.normal = detail::is_normal(t);
  if (out.normal) {
    const CMatrix b = detail::unweighted_form(t.matrix(), t.space()->weights(), 2.0);
    Eigen::ComplexSchur<CMatrix> schur(b);
    out.eigenvalues = schur.matrixT().diagonal();
    out.trustworthy = true;
    return out;
  }
  Eigen::ComplexEigenSolver<CMatrix> es(t.matrix(), true);
  out.eigenvalues = es.eigenvalues();
  CMatrix v = es.eigenvectors();
  for (Eigen::Index j = 0; j < v.cols(); ++j) v.col(j).normalize();
  out.eigenvector_condition = detail::condition_number(v);
  out.trustworthy = out.eigenvector_condition <= kEigenvectorConditionLimit;
  return out;
}

inline double spectral_radius(const CMatrix& m) {
  Eigen::ComplexEigenSolver<CMatrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// f(T) by spectral calculus. Normal operators (weighted inner product) go
/// through the Schur form of D^{1/2} T D^{-1/2}; others through an eigenvector
/// basis whose condition number must stay below 1e8.
inline CMatrix spectral_function(const MatrixOperator& t, const std::function<Complex(Complex)>& f) {
  const RVector& w = t.space()->weights();
  if (detail::is_normal(t)) {
    const CMatrix b = detail::unweighted_form(t.matrix(), w, 2.0);
    Eigen::ComplexSchur<CMatrix> schur(b);
    const CMatrix& q = schur.matrixU();
    CVector d = schur.matrixT().diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = f(d[i]);
    const CMatrix fb = q * d.asDiagonal() * q.adjoint();
    const RVector left = w.array().pow(-0.5);
    const RVector right = w.array().pow(0.5);
    return left.asDiagonal() * fb * right.asDiagonal();
  }
  Eigen::ComplexEigenSolver<CMatrix> es(t.matrix(), true);
  CMatrix v = es.eigenvectors();
  for (Eigen::Index j = 0; j < v.cols(); ++j) v.col(j).normalize();
  const double cond = detail::condition_number(v);
  if (cond > kEigenvectorConditionLimit) {
    throw DegeneracyError("eigenvector basis too ill-conditioned for spectral calculus (cond = " +
                          std::to_string(cond) + ")");
  }
  CVector d = es.eigenvalues();
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = f(d[i]);
  return v * d.asDiagonal() * v.inverse();
}

}  // namespace qvar
