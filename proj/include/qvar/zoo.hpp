#pragma once

// Named test operators on Z_N and small measure spaces.

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qvar/errors.hpp"
#include "qvar/lp_model.hpp"
#include "qvar/semigroups.hpp"
#include "qvar/types.hpp"

namespace qvar::zoo {

/// Circulant (T x)_j = sum_k nu_k x_{j-k mod N} on uniform Z_N.
inline MatrixOperator convolution(std::span<const Complex> nu) {
  const auto n = static_cast<Eigen::Index>(nu.size());
  if (n == 0) throw InputError("convolution kernel must be nonempty");
  CMatrix m = CMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) m(j, (j - k + n) % n) += nu[static_cast<std::size_t>(k)];
  }
  return MatrixOperator(std::move(m), MeasureSpace::uniform(nu.size()));
}

inline MatrixOperator convolution(std::span<const double> nu) {
  std::vector<Complex> c(nu.begin(), nu.end());
  return convolution(std::span<const Complex>(c));
}

/// (1/2) I + (1/4)(S + S^{-1}): self-adjoint, doubly stochastic, spectrum
/// {(1 + cos(2 pi k / N)) / 2} in [0, 1].
inline MatrixOperator lazy_symmetric_walk(std::size_t n) {
  if (n == 0) throw InputError("lazy walk needs N >= 1");
  std::vector<double> nu(n, 0.0);
  nu[0] += 0.5;
  nu[1 % n] += 0.25;
  nu[(n - 1) % n] += 0.25;
  return convolution(std::span<const double>(nu));
}

/// Cyclic shift e_j -> e_{j+1}: a measure-preserving isometry with unimodular spectrum.
inline MatrixOperator rotation_shift(std::size_t n) {
  if (n == 0) throw InputError("rotation needs N >= 1");
  std::vector<double> nu(n, 0.0);
  nu[1 % n] = 1.0;
  return convolution(std::span<const double>(nu));
}

/// Nonnegative matrix scaled so that every row and column sum is at most 1,
/// i.e. ||T||_1 <= 1 and ||T||_inf <= 1 on uniform weights.
inline MatrixOperator random_positive_contraction(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InputError("contraction needs N >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto sz = static_cast<Eigen::Index>(n);
  RMatrix m(sz, sz);
  for (Eigen::Index i = 0; i < sz; ++i) {
    for (Eigen::Index j = 0; j < sz; ++j) m(i, j) = unif(rng);
  }
  const double scale = std::max(m.rowwise().sum().maxCoeff(), m.colwise().sum().maxCoeff());
  m /= scale;
  return MatrixOperator(m.cast<Complex>(), MeasureSpace::uniform(n));
}

inline MatrixOperator diagonal_normal(std::span<const Complex> spectrum) {
  if (spectrum.empty()) throw InputError("spectrum list must be nonempty");
  CVector d(static_cast<Eigen::Index>(spectrum.size()));
  for (std::size_t i = 0; i < spectrum.size(); ++i) d[static_cast<Eigen::Index>(i)] = spectrum[i];
  return MatrixOperator(CMatrix(d.asDiagonal()), MeasureSpace::uniform(spectrum.size()));
}

/// A = T - I; a Markov generator whenever T is row-stochastic and nonnegative.
inline GeneratorModel markov_generator_from(const MatrixOperator& t) {
  const CMatrix id = CMatrix::Identity(t.matrix().rows(), t.matrix().cols());
  return GeneratorModel(t.matrix() - id, t.space());
}

struct ZooSpec {
  std::string id;                // lazy_symmetric_walk | rotation_shift | swap | convolution | ...
  std::size_t n = 8;
  std::vector<double> kernel;    // convolution
  std::vector<Complex> spectrum; // diagonal_normal
  std::uint64_t seed = 1;        // random_positive_contraction
  bool generator = false;        // wrap as markov_generator_from(T)
};

using ZooMember = std::variant<MatrixOperator, GeneratorModel>;

inline MatrixOperator build_matrix(const ZooSpec& spec) {
  if (spec.id == "lazy_symmetric_walk") return lazy_symmetric_walk(spec.n);
  if (spec.id == "rotation_shift") return rotation_shift(spec.n);
  if (spec.id == "swap") return rotation_shift(2);
  if (spec.id == "convolution") {
    if (spec.kernel.empty()) throw InputError("convolution needs a kernel");
    double total = 0.0;
    for (double v : spec.kernel) {
      if (!(v >= 0.0)) throw InputError("convolution kernel must be nonnegative");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InputError("convolution kernel must sum to 1");
    return convolution(std::span<const double>(spec.kernel));
  }
  if (spec.id == "random_positive_contraction") return random_positive_contraction(spec.n, spec.seed);
  if (spec.id == "diagonal_normal") return diagonal_normal(spec.spectrum);
  throw InputError("unknown zoo operator '" + spec.id + "'");
}

inline ZooMember build_operator(const ZooSpec& spec) {
  MatrixOperator t = build_matrix(spec);
  if (spec.generator) return markov_generator_from(t);
  return t;
}

}  // namespace qvar::zoo
