#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "support.hpp"

using namespace qvar;
using qvar::testing::Gen;

namespace {

ScalarSequence real_seq(std::vector<double> v) { return ScalarSequence::from_real(v); }

// Exact tau-jump count by dynamic programming over all pair chains:
// f[k] = largest number of disjoint-interior jumps whose last endpoint is <= k.
std::size_t jump_count_oracle(std::span<const Complex> a, double tau) {
  const std::size_t n = a.size();
  std::vector<std::size_t> f(n, 0);
  for (std::size_t k = 1; k < n; ++k) {
    f[k] = f[k - 1];
    for (std::size_t i = 0; i < k; ++i) {
      if (std::abs(a[k] - a[i]) > tau) f[k] = std::max(f[k], f[i] + 1);
    }
  }
  return n ? f[n - 1] : 0;
}

// Oscillation norm computed straight from the definition (all pairs in every block).
double oscillation_oracle(std::span<const Complex> a, std::span<const std::size_t> blocks) {
  const std::size_t last = a.size() - 1;
  double sum = std::norm(a[0]);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const std::size_t lo = blocks[k];
    const std::size_t hi = k + 1 < blocks.size() ? blocks[k + 1] : last;
    double diam = 0.0;
    for (std::size_t i = lo; i <= hi; ++i)
      for (std::size_t j = i; j <= hi; ++j) diam = std::max(diam, std::abs(a[i] - a[j]));
    sum += diam * diam;
  }
  return std::sqrt(sum);
}

}  // namespace

TEST(VariationExponent, RejectsBelowOneAndNonFinite) {
  EXPECT_THROW(VariationExponent{0.99}, ParameterError);
  EXPECT_THROW(VariationExponent{std::nan("")}, ParameterError);
  EXPECT_THROW(VariationExponent{kInf}, ParameterError);
  EXPECT_NO_THROW(VariationExponent{1.0});
}

TEST(ScalarSequence, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(ScalarSequence({}), InputError);
  EXPECT_THROW(ScalarSequence({Complex(1.0, std::nan(""))}), InputError);
  EXPECT_THROW(real_seq({1.0, kInf}), InputError);
}

TEST(VqNorm, DocumentedValues) {
  EXPECT_DOUBLE_EQ(vq_norm(real_seq({2, 2, 2}), VariationExponent(3)), 2.0);
  EXPECT_NEAR(vq_norm(real_seq({0, 1, 0}), VariationExponent(2)), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(vq_norm(real_seq({1, 3, 2}), VariationExponent(1)), 4.0, 1e-15);
  EXPECT_NEAR(vq_norm_bruteforce(real_seq({0, 1, 0}), VariationExponent(2)), std::sqrt(2.0), 1e-15);
  for (double q : {1.0, 1.7, 2.0, 5.0}) {
    EXPECT_DOUBLE_EQ(vq_norm_bruteforce(real_seq({5}), VariationExponent(q)), 5.0);
    EXPECT_DOUBLE_EQ(vq_norm(real_seq({-5}), VariationExponent(q)), 5.0);
  }
}

TEST(VqNorm, BruteforceRefusesLongSequences) {
  std::vector<double> v(21, 1.0);
  EXPECT_THROW(vq_norm_bruteforce(real_seq(v), VariationExponent(2)), PreconditionError);
  v.resize(20);
  EXPECT_NO_THROW(vq_norm_bruteforce(real_seq(v), VariationExponent(2)));
}

TEST(VqNorm, MatchesEnumerationOnRealSequences) {
  Gen g(11);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = g.index(1, 14);
    std::vector<double> v = g.reals(n);
    // Plateaus and repeated values exercise the turning-point selection.
    if (g.coin()) for (auto& x : v) x = std::round(2.0 * x);
    const double q = std::vector<double>{1.0, 1.25, 2.0, 2.5, 3.0, 4.0, 7.0}[g.index(0, 6)];
    const ScalarSequence s = real_seq(v);
    const double oracle = vq_norm_bruteforce(s, VariationExponent(q));
    EXPECT_NEAR(vq_norm(s, VariationExponent(q)), oracle, 1e-12 * std::max(1.0, oracle)) << "trial " << trial;
  }
}

TEST(VqNorm, MatchesEnumerationOnComplexSequences) {
  Gen g(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = g.index(1, 12);
    const double q = g.uniform(1.0, 5.0);
    const ScalarSequence s(g.complexes(n));
    const double oracle = vq_norm_bruteforce(s, VariationExponent(q));
    EXPECT_NEAR(vq_norm(s, VariationExponent(q)), oracle, 1e-12 * std::max(1.0, oracle));
  }
}

TEST(VqNorm, PrefixNormsAgreeWithSeparateEvaluation) {
  Gen g(13);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = g.index(2, 40);
    const bool complex = g.coin();
    const ScalarSequence s = g.sequence(n, complex);
    std::vector<std::size_t> ends;
    for (std::size_t e = 0; e < n; e += g.index(1, 5)) ends.push_back(e);
    const double q = 3.0;
    const auto prefix = detail::vq_prefix_norms<Complex>(s.samples(), q, ends);
    for (std::size_t k = 0; k < ends.size(); ++k) {
      std::vector<Complex> head(s.samples().begin(), s.samples().begin() + static_cast<long>(ends[k]) + 1);
      EXPECT_NEAR(prefix[k], vq_norm(ScalarSequence(head), VariationExponent(q)), 1e-12 * std::max(1.0, prefix[k]));
    }
  }
}

TEST(VqNorm, NormAxioms) {
  Gen g(14);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = g.index(2, 30);
    const bool complex = g.coin();
    const ScalarSequence a = g.sequence(n, complex);
    const ScalarSequence b = g.sequence(n, complex);
    const VariationExponent q(g.uniform(1.0, 6.0));
    const double va = vq_norm(a, q), vb = vq_norm(b, q);

    const Complex c = complex ? Complex(g.gauss(), g.gauss()) : Complex(g.gauss(), 0.0);
    std::vector<Complex> scaled(n), sum(n);
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = c * a[i];
      sum[i] = a[i] + b[i];
    }
    EXPECT_NEAR(vq_norm(ScalarSequence(scaled), q), std::abs(c) * va, 1e-10 * std::max(1.0, std::abs(c) * va));
    EXPECT_LE(vq_norm(ScalarSequence(sum), q), va + vb + 1e-10);

    // Bounded sequence: every sample is within 2 * v^q.
    double sup = 0.0;
    for (const auto& z : a.samples()) sup = std::max(sup, std::abs(z));
    EXPECT_LE(sup, 2.0 * va + 1e-10);

    const VariationExponent larger(q.value() + g.uniform(0.0, 3.0));
    EXPECT_LE(vq_norm(a, larger), va + 1e-10);
  }
}

TEST(Oscillation, DocumentedValues) {
  const std::vector<std::size_t> all{0, 1, 2};
  EXPECT_DOUBLE_EQ(oscillation_norm(real_seq({2, 2, 2}), BlockPartition(all)), 2.0);
  EXPECT_NEAR(oscillation_norm(real_seq({0, 1, 0, 1}), BlockPartition({0, 1, 2, 3})), std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(oscillation_norm(real_seq({0, 3, 1}), BlockPartition({0, 2})), 3.0, 1e-15);
}

TEST(Oscillation, PartitionValidation) {
  EXPECT_THROW(BlockPartition({1, 2}), InputError);
  EXPECT_THROW(BlockPartition({0, 2, 2}), InputError);
  EXPECT_THROW(BlockPartition({}), InputError);
  EXPECT_THROW(oscillation_norm(real_seq({0, 1}), BlockPartition({0, 5})), InputError);
  const auto d = BlockPartition::dyadic(10);
  EXPECT_EQ(std::vector<std::size_t>(d.boundaries().begin(), d.boundaries().end()),
            (std::vector<std::size_t>{0, 1, 2, 4, 8}));
}

TEST(Oscillation, MatchesDefinitionAndIsDominatedByV2) {
  Gen g(15);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = g.index(2, 16);
    const ScalarSequence a = g.sequence(n, g.coin());
    std::vector<std::size_t> blocks{0};
    while (true) {
      const std::size_t next = blocks.back() + g.index(1, 4);
      if (next > n - 1) break;
      blocks.push_back(next);
    }
    const BlockPartition part(blocks);
    const double o2 = oscillation_norm(a, part);
    EXPECT_NEAR(o2, oscillation_oracle(a.samples(), blocks), 1e-12 * std::max(1.0, o2));
    EXPECT_LE(o2, vq_norm_bruteforce(a, VariationExponent(2)) + 1e-12);
  }
}

TEST(Oscillation, NormAxioms) {
  Gen g(16);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = g.index(2, 40);
    const ScalarSequence a = g.sequence(n, true), b = g.sequence(n, true);
    const BlockPartition part = BlockPartition::dyadic(n - 1);
    std::vector<Complex> sum(n), scaled(n);
    const double c = g.uniform(-3.0, 3.0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] = a[i] + b[i];
      scaled[i] = c * a[i];
    }
    const double oa = oscillation_norm(a, part);
    EXPECT_LE(oscillation_norm(ScalarSequence(sum), part), oa + oscillation_norm(b, part) + 1e-10);
    EXPECT_NEAR(oscillation_norm(ScalarSequence(scaled), part), std::abs(c) * oa, 1e-10 * std::max(1.0, oa));
  }
}

TEST(JumpCount, DocumentedValues) {
  EXPECT_EQ(jump_count(real_seq({0, 1, 0, 1}), 0.5), 3u);
  EXPECT_EQ(jump_count(real_seq({0, 1, 0, 1}), 2.0), 0u);
  EXPECT_EQ(jump_count(real_seq({4}), 0.1), 0u);
  EXPECT_THROW(jump_count(real_seq({0, 1}), 0.0), ParameterError);
  EXPECT_THROW(jump_count(real_seq({0, 1}), -1.0), ParameterError);
}

TEST(JumpCount, GreedyMatchesExhaustiveOptimum) {
  Gen g(17);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = g.index(1, 25);
    const ScalarSequence a = g.sequence(n, g.coin());
    const double tau = g.uniform(0.05, 2.5);
    EXPECT_EQ(jump_count(a, tau), jump_count_oracle(a.samples(), tau)) << "trial " << trial;
  }
}

TEST(JumpCount, ControlledByVariation) {
  Gen g(18);
  for (int trial = 0; trial < 200; ++trial) {
    const ScalarSequence a = g.sequence(g.index(2, 50), g.coin());
    const double q = g.uniform(1.0, 5.0);
    const double tau = g.uniform(0.01, 3.0);
    const double lhs = std::pow(tau, q) * static_cast<double>(jump_count(a, tau));
    const double v = vq_norm(a, VariationExponent(q));
    EXPECT_LE(lhs, std::pow(v, q) * (1.0 + 1e-10));
  }
}

TEST(DyadicProfile, ConstantSampler) {
  const auto prof = dyadic_vq_profile([](double) { return Complex(-1.5, 2.0); }, 1.0, VariationExponent(2), 6);
  ASSERT_EQ(prof.size(), 6u);
  for (double v : prof) EXPECT_NEAR(v, 2.5, 1e-14);
}

TEST(DyadicProfile, IdentitySamplerWithQOne) {
  // For an increasing positive path v^1 of any tail equals the last sample,
  // here t = 1 at every level.
  const auto prof = dyadic_vq_profile([](double t) { return Complex(t); }, 1.0, VariationExponent(1), 8);
  for (double v : prof) EXPECT_NEAR(v, 1.0, 1e-13);
}

TEST(DyadicProfile, NondecreasingAndMatchesTailOracle) {
  Gen g(19);
  for (int trial = 0; trial < 10; ++trial) {
    const double f1 = g.uniform(1.0, 9.0), f2 = g.uniform(1.0, 9.0), ph = g.uniform(0.0, 6.0);
    const bool complex = g.coin();
    auto sampler = [&](double t) {
      return Complex(std::sin(f1 * t + ph), complex ? std::cos(f2 * t) : 0.0);
    };
    const double q = g.uniform(2.0, 4.0);
    const auto prof = dyadic_vq_profile(sampler, 1.0, VariationExponent(q), 4);
    for (std::size_t i = 1; i < prof.size(); ++i) EXPECT_GE(prof[i], prof[i - 1] - 1e-12);

    // Level 3 has 8 samples; the sup over starting points is checked by enumeration.
    std::vector<Complex> a;
    for (int n = 1; n <= 8; ++n) a.push_back(sampler(n / 8.0));
    double sup = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      std::vector<Complex> tail(a.begin() + static_cast<long>(k), a.end());
      sup = std::max(sup, vq_norm_bruteforce(ScalarSequence(tail), VariationExponent(q)));
    }
    EXPECT_NEAR(prof[2], sup, 1e-12);
  }
}

TEST(DyadicProfile, Errors) {
  auto bad = [](double t) { return t > 0.5 ? Complex(std::nan("")) : Complex(t); };
  EXPECT_THROW(dyadic_vq_profile(bad, 1.0, VariationExponent(2), 3), InputError);
  EXPECT_THROW(dyadic_vq_profile([](double) { return Complex(1); }, 1.0, VariationExponent(2), 0), ParameterError);
  EXPECT_THROW(dyadic_vq_profile([](double) { return Complex(1); }, 1.0, VariationExponent(2), 21), ParameterError);
  EXPECT_THROW(dyadic_vq_profile([](double) { return Complex(1); }, -1.0, VariationExponent(2), 3), ParameterError);
}
