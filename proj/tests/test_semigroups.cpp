#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "support.hpp"

using namespace qvar;
using qvar::testing::Gen;

namespace {

GeneratorModel scalar_generator(double a) {
  return GeneratorModel((CMatrix(1, 1) << a).finished(), MeasureSpace::uniform(1));
}

GeneratorModel walk_generator(std::size_t n) { return zoo::markov_generator_from(zoo::lazy_symmetric_walk(n)); }

// Composite Simpson rule for h^{-1} int_0^t e^{sA} ds, used as an oracle for phi.
CMatrix average_by_simpson(const GeneratorModel& g, double t, int panels) {
  const Eigen::Index n = g.matrix().rows();
  CMatrix acc = CMatrix::Zero(n, n);
  const double h = t / panels;
  for (int k = 0; k <= panels; ++k) {
    const double w = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += w * evolve(g, k * h).matrix();
  }
  return acc * (h / 3.0) / t;
}

}  // namespace

TEST(Evolve, DocumentedValues) {
  const GeneratorModel g = walk_generator(6);
  EXPECT_TRUE(evolve(g, 0.0).matrix().isApprox(CMatrix::Identity(6, 6)));
  EXPECT_NEAR(evolve(scalar_generator(-1.0), 1.0).matrix()(0, 0).real(), std::exp(-1.0), 1e-15);
  EXPECT_THROW(evolve(g, -1.0), ParameterError);
  EXPECT_THROW(evolve(g, std::nan("")), ParameterError);
  EXPECT_THROW(evolve(g, kInf), ParameterError);
}

TEST(Evolve, SemigroupLaw) {
  Gen g(41);
  for (int trial = 0; trial < 20; ++trial) {
    const GeneratorModel a(g.matrix(5), MeasureSpace::uniform(5));
    const double s = g.uniform(0.0, 2.0), t = g.uniform(0.0, 2.0);
    const CMatrix lhs = evolve(a, s + t).matrix();
    const CMatrix rhs = evolve(a, s).matrix() * evolve(a, t).matrix();
    EXPECT_LT((lhs - rhs).norm(), 1e-10 * std::max(1.0, lhs.norm()));
  }
}

TEST(Evolve, MarkovGeneratorsGiveStochasticSemigroups) {
  const GeneratorModel g = walk_generator(8);
  EXPECT_TRUE(g.markov_generator());
  for (double t : {0.01, 1.0, 50.0}) {
    const MatrixOperator tt = evolve(g, t);
    EXPECT_TRUE(tt.row_stochastic());
    EXPECT_NEAR(operator_pnorm(tt, 3.0).upper, 1.0, 1e-12);
  }
  EXPECT_FALSE(scalar_generator(1.0).markov_generator());
}

TEST(ContinuousAverage, DocumentedValues) {
  const GeneratorModel zero(CMatrix::Zero(3, 3), MeasureSpace::uniform(3));
  EXPECT_TRUE(continuous_average(zero, 2.5).matrix().isApprox(CMatrix::Identity(3, 3)));
  for (double t : {1e-6, 0.3, 1.0, 40.0}) {
    EXPECT_NEAR(continuous_average(scalar_generator(-1.0), t).matrix()(0, 0).real(), -std::expm1(-t) / t,
                1e-14);
  }
  EXPECT_THROW(continuous_average(zero, 0.0), ParameterError);
}

TEST(ContinuousAverage, MatchesQuadratureAndShrinksToIdentity) {
  Gen g(42);
  const GeneratorModel a(g.matrix(4), MeasureSpace::uniform(4));
  for (double t : {0.1, 0.7, 1.5}) {
    const CMatrix phi = continuous_average(a, t).matrix();
    EXPECT_LT((phi - average_by_simpson(a, t, 400)).norm(), 1e-8 * phi.norm());
  }
  const double norm_a = detail::spectral_norm(a.matrix());
  for (double t : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const CMatrix diff = continuous_average(a, t).matrix() - CMatrix::Identity(4, 4);
    EXPECT_LE(detail::spectral_norm(diff), t * norm_a);
  }
}

TEST(DerivativeFamily, DocumentedValues) {
  const GeneratorModel g = walk_generator(5);
  for (double t : {0.5, 2.0}) {
    EXPECT_TRUE(derivative_family(g, t, 0).matrix().isApprox(evolve(g, t).matrix()));
    EXPECT_NEAR(derivative_family(scalar_generator(-1.0), t, 1).matrix()(0, 0).real(), -t * std::exp(-t), 1e-15);
  }
  EXPECT_THROW(derivative_family(g, 1.0, -1), ParameterError);
  EXPECT_THROW(derivative_family(g, 0.0, 1), ParameterError);
}

TEST(DerivativeFamily, MatchesFiniteDifferences) {
  Gen g(43);
  const GeneratorModel a(0.5 * g.matrix(4), MeasureSpace::uniform(4));
  const double t = 0.8, h = 1e-4;
  const CMatrix fd = (evolve(a, t + h).matrix() - evolve(a, t - h).matrix()) / (2 * h);
  EXPECT_LT((t * fd - derivative_family(a, t, 1).matrix()).norm(), 1e-6);
  const CMatrix fd2 = (evolve(a, t + h).matrix() - 2.0 * evolve(a, t).matrix() + evolve(a, t - h).matrix()) / (h * h);
  EXPECT_LT((t * t * fd2 - derivative_family(a, t, 2).matrix()).norm(), 1e-4);
}

TEST(AnalyticProfile, DocumentedValues) {
  const GeneratorModel zero(CMatrix::Zero(2, 2), MeasureSpace::uniform(2));
  const AnalyticProfile z = analytic_profile(zero, 2.0, default_time_grid());
  EXPECT_NEAR(z.c0, 1.0, 1e-14);
  EXPECT_EQ(z.c1, 0.0);

  const AnalyticProfile s = analytic_profile(scalar_generator(-1.0), 2.0, default_time_grid());
  EXPECT_LE(s.c0, 1.0 + 1e-14);
  EXPECT_LE(s.c1, std::exp(-1.0) + 1e-14);
  EXPECT_NEAR(s.c1, std::exp(-1.0), 1e-4);

  // C1 = max over eigenvalues lambda of sup_t t(1 - lambda) e^{-t(1 - lambda)} = 1/e on a fine enough grid.
  const AnalyticProfile w = analytic_profile(walk_generator(8), 2.0, default_time_grid());
  EXPECT_NEAR(w.c0, 1.0, 1e-12);
  EXPECT_LE(w.c1, std::exp(-1.0) + 1e-12);
  EXPECT_NEAR(w.c1, std::exp(-1.0), 1e-4);
}

TEST(TimeGrid, Shape) {
  const auto grid = default_time_grid();
  EXPECT_EQ(grid.size(), 1201u);
  EXPECT_NEAR(grid.front(), 1e-3, 1e-18);
  EXPECT_NEAR(grid.back(), 1e3, 1e-9);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_GT(grid[i], grid[i - 1]);
  EXPECT_THROW(log_grid(0.0, 1.0, 10), ParameterError);
  EXPECT_THROW(analytic_profile(scalar_generator(-1.0), 2.0, std::vector<double>{}), ParameterError);
}

TEST(Subordination, DocumentedValues) {
  const GeneratorModel zero(CMatrix::Zero(3, 3), MeasureSpace::uniform(3));
  for (double alpha : {0.2, 0.5, 0.9}) {
    EXPECT_TRUE(subordinate(zero, {alpha, 2.0}).op.matrix().isApprox(CMatrix::Identity(3, 3)));
  }
  const SubordinationResult q = subordinate(zero, {0.5, 2.0, SubordinationMethod::quadrature});
  EXPECT_LT((q.op.matrix() - CMatrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-9);

  const GeneratorModel minus_one = scalar_generator(-1.0);
  EXPECT_NEAR(subordinate(minus_one, {0.5, 1.0}).op.matrix()(0, 0).real(), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(subordinate(minus_one, {0.5, 1.0, SubordinationMethod::quadrature}).op.matrix()(0, 0).real(),
              std::exp(-1.0), 1e-9);
}

TEST(Subordination, MethodsAgreeAndDensityHasUnitMass) {
  const GeneratorModel g = walk_generator(8);
  for (double t : {0.1, 1.0, 10.0}) {
    const SubordinationResult s = subordinate(g, {0.5, t, SubordinationMethod::spectral});
    const SubordinationResult q = subordinate(g, {0.5, t, SubordinationMethod::quadrature});
    EXPECT_LT((s.op.matrix() - q.op.matrix()).cwiseAbs().maxCoeff(), 1e-8) << "t=" << t;
    EXPECT_NEAR(q.weight_sum + q.tail_mass, 1.0, 1e-10);
    EXPECT_GT(q.nodes, 0);
    EXPECT_TRUE(s.op.row_stochastic());
  }
}

TEST(Subordination, SpectralMethodIsASemigroup) {
  const GeneratorModel g = walk_generator(6);
  for (double alpha : {0.3, 0.5, 0.75}) {
    const CMatrix a = subordinate(g, {alpha, 0.4}).op.matrix();
    const CMatrix b = subordinate(g, {alpha, 1.1}).op.matrix();
    const CMatrix ab = subordinate(g, {alpha, 1.5}).op.matrix();
    EXPECT_LT((a * b - ab).norm(), 1e-12);
  }
}

TEST(Subordination, Errors) {
  const GeneratorModel g = walk_generator(4);
  EXPECT_THROW(subordinate(g, {0.0, 1.0}), ParameterError);
  EXPECT_THROW(subordinate(g, {1.0, 1.0}), ParameterError);
  EXPECT_THROW(subordinate(g, {0.5, 0.0}), ParameterError);
  EXPECT_THROW(subordinate(g, {0.3, 1.0, SubordinationMethod::quadrature}), PreconditionError);
  EXPECT_THROW(subordinate(scalar_generator(0.5), {0.5, 1.0}), PreconditionError);
  const CMatrix jordan = (CMatrix(2, 2) << -1.0, 1.0, 0.0, -1.0).finished();
  EXPECT_THROW(subordinate(GeneratorModel(jordan, MeasureSpace::uniform(2)), {0.5, 1.0}), DegeneracyError);
}

TEST(GeneratorModel, Validation) {
  EXPECT_THROW(GeneratorModel(CMatrix::Zero(2, 2), MeasureSpace::uniform(3)), InputError);
  CMatrix bad = CMatrix::Zero(2, 2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(GeneratorModel(bad, MeasureSpace::uniform(2)), InputError);
}
