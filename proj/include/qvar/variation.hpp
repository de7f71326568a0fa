#pragma once

// Sequence-level seminorms: strong q-variation, oscillation norm over a block
// partition, tau-jump counts and the dyadic approximants of the continuous
// q-variation of a sampled path.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "qvar/errors.hpp"
#include "qvar/types.hpp"

namespace qvar {

/// Exponent q >= 1 of a strong q-variation norm.
class VariationExponent {
 public:
  explicit VariationExponent(double q) : q_(q) {
    if (!std::isfinite(q) || q < 1.0) {
      throw ParameterError("variation exponent q must be finite and >= 1, got " + std::to_string(q));
    }
  }
  double value() const noexcept { return q_; }

 private:
  double q_;
};

/// Finite trajectory (a_0, ..., a_m) of complex samples; never empty, always finite.
class ScalarSequence {
 public:
  explicit ScalarSequence(std::vector<Complex> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) throw InputError("sequence must contain at least one sample");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!std::isfinite(samples_[i].real()) || !std::isfinite(samples_[i].imag())) {
        throw InputError("sequence entry " + std::to_string(i) + " is not finite");
      }
    }
  }

  static ScalarSequence from_real(std::span<const double> values) {
    return ScalarSequence(std::vector<Complex>(values.begin(), values.end()));
  }

  std::span<const Complex> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  const Complex& operator[](std::size_t i) const { return samples_[i]; }

  bool is_real() const noexcept {
    return std::all_of(samples_.begin(), samples_.end(),
                       [](const Complex& z) { return z.imag() == 0.0; });
  }

  std::vector<double> real_parts() const {
    std::vector<double> out(samples_.size());
    std::transform(samples_.begin(), samples_.end(), out.begin(),
                   [](const Complex& z) { return z.real(); });
    return out;
  }

 private:
  std::vector<Complex> samples_;
};

/// Increasing block boundaries n_0 = 0 < n_1 < ... used by the oscillation norm.
class BlockPartition {
 public:
  explicit BlockPartition(std::vector<std::size_t> boundaries) : boundaries_(std::move(boundaries)) {
    if (boundaries_.empty() || boundaries_.front() != 0) {
      throw InputError("block partition must start at index 0");
    }
    for (std::size_t k = 1; k < boundaries_.size(); ++k) {
      if (boundaries_[k] <= boundaries_[k - 1]) {
        throw InputError("block partition must be strictly increasing");
      }
    }
  }

  /// 0, 1, 2, 4, 8, ... up to and including the largest power of two <= last.
  static BlockPartition dyadic(std::size_t last) {
    std::vector<std::size_t> b{0};
    for (std::size_t n = 1; n <= last; n *= 2) b.push_back(n);
    return BlockPartition(std::move(b));
  }

  /// 0, 1, 2, ..., last.
  static BlockPartition singletons(std::size_t last) {
    std::vector<std::size_t> b(last + 1);
    std::iota(b.begin(), b.end(), std::size_t{0});
    return BlockPartition(std::move(b));
  }

  std::span<const std::size_t> boundaries() const noexcept { return boundaries_; }

 private:
  std::vector<std::size_t> boundaries_;
};

namespace detail {

/// |z|^q with exact repeated multiplication for small integer q.
class PowerOfModulus {
 public:
  explicit PowerOfModulus(double q) : q_(q) {
    const double r = std::round(q);
    if (r == q && r <= 8.0) int_q_ = static_cast<int>(r);
  }

  double operator()(double modulus) const {
    switch (int_q_) {
      case 1: return modulus;
      case 2: return modulus * modulus;
      case 3: return modulus * modulus * modulus;
      case 4: { const double s = modulus * modulus; return s * s; }
      default: return std::pow(modulus, q_);
    }
  }

 private:
  double q_;
  int int_q_ = 0;
};

inline double modulus(double x) { return std::abs(x); }
inline double modulus(const Complex& z) { return std::abs(z); }

/// Indices that can appear in an optimal chain of a real sequence: index 0,
/// every point where the sequence does not strictly continue its direction,
/// and the last index. Interior points of strictly monotone runs never help
/// because s -> |s - a|^q + |b - s|^q is convex.
inline std::vector<std::size_t> turning_points(std::span<const double> a) {
  std::vector<std::size_t> idx{0};
  const std::size_t n = a.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if ((a[i] - a[i - 1]) * (a[i + 1] - a[i]) <= 0.0) idx.push_back(i);
  }
  if (n > 1) idx.push_back(n - 1);
  return idx;
}

template <class Scalar>
std::vector<std::size_t> chain_candidates(std::span<const Scalar> a) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return turning_points(a);
  } else {
    std::vector<std::size_t> idx(a.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
  }
}

/// Strong q-variation of every prefix a_0..a_m for m in `ends` (ascending).
/// One chain DP over the candidate indices serves all prefixes.
template <class Scalar>
std::vector<double> vq_prefix_norms(std::span<const Scalar> a, double q,
                                    std::span<const std::size_t> ends) {
  const PowerOfModulus pw(q);
  const std::vector<std::size_t> cand = chain_candidates(a);
  const std::size_t k = cand.size();

  // best[c]: largest sum of q-th powers of increments over chains 0 = n_0 < ... < n_K = cand[c].
  std::vector<double> best(k, 0.0);
  for (std::size_t c = 1; c < k; ++c) {
    const Scalar aj = a[cand[c]];
    double e = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
      e = std::max(e, best[i] + pw(modulus(aj - a[cand[i]])));
    }
    best[c] = e;
  }
  std::vector<double> running(k, 0.0);
  for (std::size_t c = 1; c < k; ++c) running[c] = std::max(running[c - 1], best[c]);

  const double anchor = pw(modulus(a[0]));
  std::vector<double> out;
  out.reserve(ends.size());
  std::size_t c = 0;  // number of candidates with index <= current end
  for (std::size_t end : ends) {
    while (c < k && cand[c] <= end) ++c;
    double e = running[c - 1];
    if (cand[c - 1] != end) {
      const Scalar am = a[end];
      for (std::size_t i = 0; i < c; ++i) e = std::max(e, best[i] + pw(modulus(am - a[cand[i]])));
    }
    out.push_back(std::pow(anchor + e, 1.0 / q));
  }
  return out;
}

/// Oscillation norm of the prefix a_0..a_last relative to `blocks`; blocks
/// reaching past `last` are clipped (the prefix is read as constant after last).
template <class Scalar>
double oscillation_prefix(std::span<const Scalar> a, std::span<const std::size_t> blocks,
                          std::size_t last) {
  double sum = modulus(a[0]) * modulus(a[0]);
  for (std::size_t k = 0; k < blocks.size() && blocks[k] < last; ++k) {
    const std::size_t lo = blocks[k];
    const std::size_t hi = (k + 1 < blocks.size()) ? std::min(blocks[k + 1], last) : last;
    double diam = 0.0;
    if constexpr (std::is_same_v<Scalar, double>) {
      const auto [mn, mx] = std::minmax_element(a.begin() + lo, a.begin() + hi + 1);
      diam = *mx - *mn;
    } else {
      for (std::size_t i = lo; i <= hi; ++i) {
        for (std::size_t j = i + 1; j <= hi; ++j) diam = std::max(diam, std::abs(a[i] - a[j]));
      }
    }
    sum += diam * diam;
  }
  return std::sqrt(sum);
}

template <class Scalar>
std::size_t jump_count(std::span<const Scalar> a, double tau) {
  std::size_t count = 0;
  std::size_t start = 0;
  const std::size_t n = a.size();
  while (start + 1 < n) {
    std::size_t found = n;
    if constexpr (std::is_same_v<Scalar, double>) {
      double lo = a[start], hi = a[start];
      for (std::size_t m = start + 1; m < n; ++m) {
        if (a[m] - lo > tau || hi - a[m] > tau) { found = m; break; }
        lo = std::min(lo, a[m]);
        hi = std::max(hi, a[m]);
      }
    } else {
      for (std::size_t m = start + 1; m < n && found == n; ++m) {
        for (std::size_t i = start; i < m; ++i) {
          if (std::abs(a[m] - a[i]) > tau) { found = m; break; }
        }
      }
    }
    if (found == n) break;
    ++count;
    start = found;
  }
  return count;
}

}  // namespace detail

/// Strong q-variation norm of the finite tuple (the constant extension adds no increments).
inline double vq_norm(const ScalarSequence& seq, VariationExponent q) {
  const std::size_t end = seq.size() - 1;
  if (seq.is_real()) {
    const std::vector<double> re = seq.real_parts();
    return detail::vq_prefix_norms<double>(re, q.value(), std::span(&end, 1)).front();
  }
  return detail::vq_prefix_norms<Complex>(seq.samples(), q.value(), std::span(&end, 1)).front();
}

/// Exhaustive maximum over all 2^m chains through index 0. Independent check of vq_norm.
inline double vq_norm_bruteforce(const ScalarSequence& seq, VariationExponent q) {
  if (seq.size() > 20) {
    throw PreconditionError("brute-force q-variation refuses sequences longer than 20");
  }
  const auto a = seq.samples();
  const std::size_t m = seq.size() - 1;
  const double qq = q.value();
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    double sum = 0.0;
    std::size_t prev = 0;
    for (std::size_t bit = 0; bit < m; ++bit) {
      if (mask & (std::uint64_t{1} << bit)) {
        sum += std::pow(std::abs(a[bit + 1] - a[prev]), qq);
        prev = bit + 1;
      }
    }
    best = std::max(best, sum);
  }
  return std::pow(std::pow(std::abs(a[0]), qq) + best, 1.0 / qq);
}

/// Oscillation norm (|a_0|^2 + sum_k max_{n_k <= i,j <= n_{k+1}} |a_i - a_j|^2)^(1/2).
/// A final block [n_K, m] covers the samples past the last boundary.
inline double oscillation_norm(const ScalarSequence& seq, const BlockPartition& blocks) {
  const std::size_t last = seq.size() - 1;
  if (blocks.boundaries().back() > last) {
    throw InputError("block boundary " + std::to_string(blocks.boundaries().back()) +
                     " exceeds sequence length");
  }
  if (seq.is_real()) {
    const std::vector<double> re = seq.real_parts();
    return detail::oscillation_prefix<double>(re, blocks.boundaries(), last);
  }
  return detail::oscillation_prefix<Complex>(seq.samples(), blocks.boundaries(), last);
}

/// Number of tau-jumps: longest chain n_1 < m_1 <= n_2 < m_2 <= ... with
/// |a_{m_k} - a_{n_k}| > tau. Earliest-completion greedy.
inline std::size_t jump_count(const ScalarSequence& seq, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ParameterError("jump threshold tau must be positive and finite");
  }
  if (seq.is_real()) {
    const std::vector<double> re = seq.real_parts();
    return detail::jump_count<double>(re, tau);
  }
  return detail::jump_count<Complex>(seq.samples(), tau);
}

/// Dyadic approximants phi_N of the continuous q-variation of t -> sampler(t)
/// on (0, t_max]: phi_N = sup_{k>=1} ||(a_{n 2^-N})_{n>=k}||_{v^q}, N = 1..n_max.
/// Entry N-1 of the result is phi_N; the list is nondecreasing in N.
inline std::vector<double> dyadic_vq_profile(const std::function<Complex(double)>& sampler,
                                             double t_max, VariationExponent q, int n_max) {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ParameterError("t_max must be positive");
  if (n_max < 1 || n_max > 20) throw ParameterError("dyadic level must lie in 1..20");
  const detail::PowerOfModulus pw(q.value());
  std::vector<double> profile;
  profile.reserve(static_cast<std::size_t>(n_max));

  for (int level = 1; level <= n_max; ++level) {
    const double h = std::ldexp(1.0, -level);
    const auto count = static_cast<std::size_t>(std::floor(t_max / h + 1e-9));
    if (count == 0) throw ParameterError("t_max is shorter than the dyadic step");
    std::vector<Complex> a(count);
    bool real = true;
    for (std::size_t n = 0; n < count; ++n) {
      a[n] = sampler(static_cast<double>(n + 1) * h);
      if (!std::isfinite(a[n].real()) || !std::isfinite(a[n].imag())) {
        throw InputError("sampler returned a non-finite value at t = " +
                         std::to_string(static_cast<double>(n + 1) * h));
      }
      real = real && a[n].imag() == 0.0;
    }

    // tail[c]: best sum of q-th increment powers over chains starting at candidate c.
    // A chain starting at an arbitrary index k continues through candidates only.
    std::vector<std::size_t> cand;
    if (real) {
      std::vector<double> re(count);
      for (std::size_t n = 0; n < count; ++n) re[n] = a[n].real();
      cand = detail::turning_points(re);
    } else {
      cand.resize(count);
      std::iota(cand.begin(), cand.end(), std::size_t{0});
    }
    std::vector<double> tail(cand.size(), 0.0);
    for (std::size_t c = cand.size(); c-- > 0;) {
      double e = 0.0;
      for (std::size_t j = c + 1; j < cand.size(); ++j) {
        e = std::max(e, tail[j] + pw(std::abs(a[cand[j]] - a[cand[c]])));
      }
      tail[c] = e;
    }
    double sup = 0.0;
    std::size_t first_after = 0;  // first candidate with index > k
    for (std::size_t k = 0; k < count; ++k) {
      while (first_after < cand.size() && cand[first_after] <= k) ++first_after;
      double e = 0.0;
      for (std::size_t j = first_after; j < cand.size(); ++j) {
        e = std::max(e, tail[j] + pw(std::abs(a[cand[j]] - a[k])));
      }
      sup = std::max(sup, std::pow(pw(std::abs(a[k])) + e, 1.0 / q.value()));
    }
    profile.push_back(sup);
  }
  return profile;
}

}  // namespace qvar
