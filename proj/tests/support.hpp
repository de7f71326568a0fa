#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qvar/qvar.hpp"

namespace qvar::testing {

// Small seeded generators shared by the property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double gauss() { return std::normal_distribution<double>()(rng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool coin() { return index(0, 1) == 1; }

  std::vector<double> reals(std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * gauss();
    return v;
  }

  std::vector<Complex> complexes(std::size_t n, double scale = 1.0) {
    std::vector<Complex> v(n);
    for (auto& z : v) z = scale * Complex(gauss(), gauss());
    return v;
  }

  ScalarSequence sequence(std::size_t n, bool complex) {
    if (complex) return ScalarSequence(complexes(n));
    const auto r = reals(n);
    return ScalarSequence::from_real(r);
  }

  CVector vector(Eigen::Index n, bool complex = true) {
    CVector x(n);
    for (auto& z : x) z = complex ? Complex(gauss(), gauss()) : Complex(gauss(), 0.0);
    return x;
  }

  CMatrix matrix(Eigen::Index n, bool complex = true) {
    CMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = complex ? Complex(gauss(), gauss()) : Complex(gauss(), 0.0);
    }
    return m;
  }

  // Random matrix rescaled to unit spectral norm.
  CMatrix contraction(Eigen::Index n, bool complex = true) {
    CMatrix m = matrix(n, complex);
    Eigen::JacobiSVD<CMatrix> svd(m);
    return m / svd.singularValues()(0);
  }

  std::vector<double> weights(std::size_t n) {
    std::vector<double> w(n);
    for (auto& x : w) x = uniform(0.2, 2.0);
    return w;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline CVector to_cvector(const std::vector<Complex>& v) {
  return Eigen::Map<const CVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace qvar::testing
