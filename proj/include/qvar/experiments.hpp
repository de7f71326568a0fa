#pragma once

// Inequality-verification harness: empirical constants of trajectory maps
// x -> (F_n x)_n into L^p(v^q) or L^p(o^2), square functions, telescoping
// identities for Delta_n^m, pointwise convergence, the p = 2 cyclic
// transference check and q-sweeps.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qvar/analyticity.hpp"
#include "qvar/errors.hpp"
#include "qvar/lp_model.hpp"
#include "qvar/parallel.hpp"
#include "qvar/semigroups.hpp"
#include "qvar/spectrum.hpp"
#include "qvar/types.hpp"
#include "qvar/variation.hpp"
#include "qvar/zoo.hpp"

namespace qvar {

enum class FamilyKind {
  ergodic_averages,
  powers,
  differences,          // n^m Delta_n^m, n >= 1 (n >= 0 when m = 0)
  continuous_averages,  // M_t on the grid t = k h
  continuous_powers,    // T_t on the grid t = k h
  derivative_family     // t^m A^m T_t on the grid t = k h
};

inline const char* to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::ergodic_averages: return "ergodic_averages";
    case FamilyKind::powers: return "powers";
    case FamilyKind::differences: return "differences";
    case FamilyKind::continuous_averages: return "continuous_averages";
    case FamilyKind::continuous_powers: return "continuous_powers";
    default: return "derivative_family";
  }
}

inline bool is_continuous(FamilyKind k) {
  return k == FamilyKind::continuous_averages || k == FamilyKind::continuous_powers ||
         k == FamilyKind::derivative_family;
}

using Base = std::variant<MatrixOperator, GeneratorModel>;

struct OperatorFamilySpec {
  FamilyKind kind = FamilyKind::powers;
  Base base;
  int order = 0;           // m for differences and derivative_family
  double time_step = 0.25; // grid spacing h for continuous families
  std::string operator_id = "custom";
};

inline SpacePtr base_space(const Base& b) {
  return std::visit([](const auto& op) { return op.space(); }, b);
}

/// F_0, ..., F_last of the family. Discrete families start at n = 0 except
/// differences of order m >= 1, which start at n = 1. Continuous families
/// are sampled at t_k = k h, k = 0..last, with the t = 0 member taken as
/// the limit (I, or 0 for derivative orders m >= 1).
inline std::vector<CMatrix> family_matrices(const OperatorFamilySpec& spec, std::size_t last) {
  std::vector<CMatrix> out;
  out.reserve(last + 1);
  if (is_continuous(spec.kind)) {
    const auto* g = std::get_if<GeneratorModel>(&spec.base);
    if (!g) throw InputError(std::string("family ") + to_string(spec.kind) + " needs a generator");
    if (!(spec.time_step > 0.0) || !std::isfinite(spec.time_step)) throw ParameterError("time step must be positive");
    if (spec.kind == FamilyKind::derivative_family && spec.order < 0) throw ParameterError("derivative order must be >= 0");
    const double h = spec.time_step;
    const CMatrix& a = g->matrix();
    const Eigen::Index n = a.rows();
    const CMatrix id = CMatrix::Identity(n, n);
    const CMatrix step = evolve(*g, h).matrix();
    const CMatrix avg_step = phi1(h * a);  // h^{-1} int_0^h T_s ds
    CMatrix power = id;                    // T_{kh}
    CMatrix power_sum = CMatrix::Zero(n, n);
    CMatrix a_pow = id;
    for (int k = 0; k < spec.order; ++k) a_pow = a_pow * a;
    for (std::size_t k = 0; k <= last; ++k) {
      const double t = h * static_cast<double>(k);
      switch (spec.kind) {
        case FamilyKind::continuous_powers: out.push_back(power); break;
        case FamilyKind::continuous_averages:
          out.push_back(k == 0 ? id : CMatrix(power_sum * avg_step / static_cast<double>(k)));
          break;
        default:
          out.push_back(spec.order == 0 ? power
                                        : CMatrix(std::pow(t, spec.order) * a_pow * power));
      }
      power_sum += power;
      power = power * step;
    }
    return out;
  }

  const auto* t = std::get_if<MatrixOperator>(&spec.base);
  if (!t) throw InputError(std::string("family ") + to_string(spec.kind) + " needs a matrix operator");
  const CMatrix& m = t->matrix();
  const Eigen::Index n = m.rows();
  const CMatrix id = CMatrix::Identity(n, n);
  switch (spec.kind) {
    case FamilyKind::powers: {
      CMatrix p = id;
      for (std::size_t k = 0; k <= last; ++k) {
        out.push_back(p);
        p = p * m;
      }
      break;
    }
    case FamilyKind::ergodic_averages: {
      CMatrix p = id, sum = CMatrix::Zero(n, n);
      for (std::size_t k = 0; k <= last; ++k) {
        sum += p;
        out.push_back(sum / static_cast<double>(k + 1));
        p = p * m;
      }
      break;
    }
    case FamilyKind::differences: {
      if (spec.order < 0) throw ParameterError("difference order must be >= 0");
      CMatrix d = matrix_power(m - id, spec.order);
      const std::size_t first = spec.order == 0 ? 0 : 1;
      CMatrix cur = matrix_power(m, static_cast<long>(first)) * d;  // Delta_first^m
      for (std::size_t k = 0; k <= last; ++k) {
        const double idx = static_cast<double>(first + k);
        out.push_back(std::pow(idx, spec.order) * cur);
        cur = m * cur;
      }
      break;
    }
    default: break;
  }
  return out;
}

enum class NormMode { variation, oscillation };

struct ExperimentConfig {
  double p = 2.0;
  double q = 3.0;
  NormMode mode = NormMode::variation;
  std::optional<BlockPartition> partition;  // o^2 mode; dyadic when absent
  std::vector<std::size_t> truncations{64, 128, 256, 512};
  std::size_t sample_budget = 2000;
  int ascent_steps = 20;
  std::uint64_t seed = 7;
  double stable_threshold = 0.05;   // relative drift below which the verdict is stable
  double growing_threshold = 1.0;   // relative drift above which the verdict is growing
  int threads = 0;
  bool allow_q2 = false;            // set by q-sweep / o^2 callers
};

inline void validate(const ExperimentConfig& cfg) {
  if (!(cfg.p > 1.0) || !std::isfinite(cfg.p)) throw ParameterError("p must lie in (1, inf)");
  static_cast<void>(VariationExponent(cfg.q));
  if (cfg.mode == NormMode::variation && !(cfg.q > 2.0) && !cfg.allow_q2) {
    throw ParameterError("q must exceed 2 in v^q mode");
  }
  if (cfg.truncations.empty()) throw ParameterError("at least one truncation is required");
  for (std::size_t m : cfg.truncations) {
    if (m < 2) throw ParameterError("truncations must be >= 2");
  }
  if (cfg.sample_budget == 0) throw ParameterError("sample budget must be positive");
  if (cfg.ascent_steps < 0) throw ParameterError("ascent steps must be >= 0");
}

/// x -> ||(F_n x)_{n <= m}||_{L^p(v^q or o^2)} / ||x||_p for several truncations m.
class TrajectoryObjective {
 public:
  TrajectoryObjective(const std::vector<CMatrix>& family, SpacePtr space, const ExperimentConfig& cfg,
                      std::vector<std::size_t> truncations)
      : space_(std::move(space)), p_(cfg.p), q_(cfg.q), mode_(cfg.mode), truncations_(std::move(truncations)) {
    n_ = static_cast<Eigen::Index>(space_->size());
    steps_ = family.size();
    stacked_.resize(static_cast<Eigen::Index>(steps_) * n_, n_);
    for (std::size_t k = 0; k < steps_; ++k) stacked_.middleRows(static_cast<Eigen::Index>(k) * n_, n_) = family[k];
    real_ = stacked_.imag().cwiseAbs().maxCoeff() == 0.0;
    if (real_) stacked_real_ = stacked_.real();
    if (mode_ == NormMode::oscillation) {
      const BlockPartition part = cfg.partition ? *cfg.partition : BlockPartition::dyadic(steps_ - 1);
      partition_.assign(part.boundaries().begin(), part.boundaries().end());
    }
  }

  bool real() const noexcept { return real_; }
  Eigen::Index dimension() const noexcept { return n_; }
  const std::vector<std::size_t>& truncations() const noexcept { return truncations_; }
  std::span<const std::size_t> partition() const noexcept { return partition_; }

  /// Ratios at every truncation.
  std::vector<double> ratios(const CVector& x) const { return evaluate(x, truncations_); }

  double ratio(const CVector& x, std::size_t truncation) const {
    const std::size_t ends[1] = {truncation};
    return evaluate(x, ends).front();
  }

  /// Trajectory (F_0 x)(atom), ..., (F_last x)(atom) for every atom.
  std::vector<std::vector<Complex>> trajectories(const CVector& x, std::size_t last) const {
    const CVector y = stacked_.topRows(static_cast<Eigen::Index>(last + 1) * n_) * x;
    std::vector<std::vector<Complex>> out(static_cast<std::size_t>(n_), std::vector<Complex>(last + 1));
    for (std::size_t k = 0; k <= last; ++k) {
      for (Eigen::Index a = 0; a < n_; ++a) out[static_cast<std::size_t>(a)][k] = y[static_cast<Eigen::Index>(k) * n_ + a];
    }
    return out;
  }

 private:
  template <class Scalar, class Vec>
  std::vector<double> pointwise_then_norm(const Vec& y, std::span<const std::size_t> ends, double xnorm) const {
    const std::size_t last = ends.back();
    std::vector<RVector> pointwise(ends.size(), RVector(n_));
    std::vector<Scalar> traj(last + 1);
    for (Eigen::Index a = 0; a < n_; ++a) {
      for (std::size_t k = 0; k <= last; ++k) traj[k] = y[static_cast<Eigen::Index>(k) * n_ + a];
      if (mode_ == NormMode::variation) {
        const std::vector<double> v = detail::vq_prefix_norms<Scalar>(traj, q_, ends);
        for (std::size_t e = 0; e < ends.size(); ++e) pointwise[e][a] = v[e];
      } else {
        for (std::size_t e = 0; e < ends.size(); ++e) {
          pointwise[e][a] = detail::oscillation_prefix<Scalar>(std::span<const Scalar>(traj).first(ends[e] + 1),
                                                               partition_, ends[e]);
        }
      }
    }
    std::vector<double> out(ends.size());
    for (std::size_t e = 0; e < ends.size(); ++e) {
      out[e] = detail::weighted_lp(pointwise[e], space_->weights(), p_) / xnorm;
    }
    return out;
  }

  std::vector<double> evaluate(const CVector& x, std::span<const std::size_t> ends) const {
    const double xnorm = detail::weighted_lp(x, space_->weights(), p_);
    if (xnorm == 0.0) return std::vector<double>(ends.size(), 0.0);
    const auto rows = static_cast<Eigen::Index>(ends.back() + 1) * n_;
    if (real_ && x.imag().cwiseAbs().maxCoeff() == 0.0) {
      const RVector y = stacked_real_.topRows(rows) * x.real();
      return pointwise_then_norm<double>(y, ends, xnorm);
    }
    const CVector y = stacked_.topRows(rows) * x;
    return pointwise_then_norm<Complex>(y, ends, xnorm);
  }

  SpacePtr space_;
  double p_, q_;
  NormMode mode_;
  std::vector<std::size_t> truncations_;
  std::vector<std::size_t> partition_;
  Eigen::Index n_ = 0;
  std::size_t steps_ = 0;
  CMatrix stacked_;
  RMatrix stacked_real_;
  bool real_ = false;
};

enum class Verdict { stable, growing, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::growing: return "growing";
    default: return "inconclusive";
  }
}

struct JumpCheck {
  std::vector<double> taus;
  std::vector<double> scaled_jump_norms;  // tau * ||N(., tau)^{1/q}||_p / ||x||_p at the largest truncation
  double max_pointwise_violation = 0.0;   // max of tau^q N - (v^q)^q over atoms, taus (<= 0 expected)
  bool ok = true;
};

struct EmpiricalReport {
  std::string operator_id;
  FamilyKind family = FamilyKind::powers;
  int order = 0;
  double time_step = 0.0;
  ExperimentConfig config;
  std::vector<std::size_t> truncations;
  std::vector<double> constants;
  std::vector<double> best_sample_constants;  // before ascent / witness reuse
  std::vector<Complex> witness;               // witness at the largest truncation, ||x||_p = 1
  double growth = 0.0;                        // constants.back() / constants.front() - 1
  Verdict verdict = Verdict::inconclusive;
  JumpCheck jumps;
  std::optional<double> stolz_k;
  std::vector<double> refinement_profile;     // dyadic V^q profile of the witness path (continuous families)
  double runtime_seconds = 0.0;
};

namespace detail {

inline CVector random_unit_vector(std::uint64_t seed, Eigen::Index n, bool real, const RVector& w, double p) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  CVector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = real ? Complex(gauss(rng), 0.0) : Complex(gauss(rng), gauss(rng));
  const double norm = weighted_lp(x, w, p);
  return norm > 0.0 ? CVector(x / norm) : x;
}

/// Finite-difference ascent on the unit sphere of L^p. Forward differences with
/// step 1e-4, backtracking step halving; stops after `steps` iterations or when
/// the relative gain falls below 1e-6.
template <class F>
std::pair<CVector, double> ascend(const F& f, CVector x, bool real, const RVector& w, double p, int steps) {
  const Eigen::Index n = x.size();
  const Eigen::Index dims = real ? n : 2 * n;
  constexpr double fd = 1e-4;
  auto coord = [&](CVector& v, Eigen::Index d) -> double& {
    return d < n ? reinterpret_cast<double(&)[2]>(v[d])[0] : reinterpret_cast<double(&)[2]>(v[d - n])[1];
  };
  auto normalize = [&](CVector v) {
    const double s = weighted_lp(v, w, p);
    return s > 0.0 ? CVector(v / s) : v;
  };
  x = normalize(x);
  double fx = f(x);
  for (int it = 0; it < steps; ++it) {
    RVector grad(dims);
    for (Eigen::Index d = 0; d < dims; ++d) {
      CVector xp = x;
      coord(xp, d) += fd;
      grad[d] = (f(xp) - fx) / fd;
    }
    const double gnorm = grad.norm();
    if (!(gnorm > 0.0)) break;
    bool improved = false;
    for (double alpha = 0.5; alpha > 1e-8; alpha *= 0.5) {
      CVector cand = x;
      for (Eigen::Index d = 0; d < dims; ++d) coord(cand, d) += alpha * grad[d] / gnorm;
      cand = normalize(cand);
      const double fc = f(cand);
      if (fc > fx) {
        const double gain = (fc - fx) / std::max(fx, 1e-300);
        x = std::move(cand);
        fx = fc;
        improved = gain >= 1e-6;
        break;
      }
    }
    if (!improved) break;
  }
  return {x, fx};
}

inline Verdict classify(double growth, const ExperimentConfig& cfg) {
  if (growth < cfg.stable_threshold) return Verdict::stable;
  if (growth > cfg.growing_threshold) return Verdict::growing;
  return Verdict::inconclusive;
}

}  // namespace detail

/// Jump-count corollary on the trajectories of x: pointwise tau^q N <= (v^q)^q,
/// and the L^p bound tau ||N^{1/q}||_p <= ||v^q||_p.
inline JumpCheck jump_check(const TrajectoryObjective& obj, const CVector& x, std::size_t last, double p, double q,
                            const RVector& w) {
  JumpCheck out;
  const auto traj = obj.trajectories(x, last);
  const double xnorm = detail::weighted_lp(x, w, p);
  double amplitude = 0.0;
  for (const auto& tr : traj) {
    for (const auto& z : tr) amplitude = std::max(amplitude, std::abs(z));
  }
  const std::size_t ends[1] = {last};
  std::vector<double> vq(traj.size());
  for (std::size_t a = 0; a < traj.size(); ++a) {
    vq[a] = detail::vq_prefix_norms<Complex>(traj[a], q, ends).front();
  }
  for (double factor : {0.5, 0.25, 0.1, 0.05, 0.01}) {
    const double tau = factor * amplitude;
    if (!(tau > 0.0)) continue;
    RVector jumps_q(static_cast<Eigen::Index>(traj.size()));
    for (std::size_t a = 0; a < traj.size(); ++a) {
      const auto count = static_cast<double>(detail::jump_count<Complex>(traj[a], tau));
      const double lhs = std::pow(tau, q) * count;
      const double rhs = std::pow(vq[a], q);
      out.max_pointwise_violation = std::max(out.max_pointwise_violation, lhs - rhs);
      if (lhs > rhs * (1.0 + 1e-12) + 1e-300) out.ok = false;
      jumps_q[static_cast<Eigen::Index>(a)] = std::pow(count, 1.0 / q);
    }
    out.taus.push_back(tau);
    out.scaled_jump_norms.push_back(tau * detail::weighted_lp(jumps_q, w, p) / xnorm);
  }
  return out;
}

/// Lower estimate of sup_x ||(F_n x)_{n<=m}||_{L^p(v^q)} / ||x||_p for each
/// truncation m: seeded sphere sampling (plus the N atom indicators), ascent
/// from the best sample, and re-evaluation of the witnesses of smaller
/// truncations, which makes the constants nondecreasing in m.
inline EmpiricalReport empirical_constant(const OperatorFamilySpec& family, const ExperimentConfig& cfg_in) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg = cfg_in;
  validate(cfg);
  std::sort(cfg.truncations.begin(), cfg.truncations.end());
  cfg.truncations.erase(std::unique(cfg.truncations.begin(), cfg.truncations.end()), cfg.truncations.end());

  const SpacePtr space = base_space(family.base);
  const std::vector<CMatrix> mats = family_matrices(family, cfg.truncations.back());
  if (cfg.mode == NormMode::oscillation && cfg.partition &&
      cfg.partition->boundaries().back() > cfg.truncations.back()) {
    throw InputError("block partition extends past the largest truncation");
  }
  const TrajectoryObjective obj(mats, space, cfg, cfg.truncations);
  const RVector& w = space->weights();
  const Eigen::Index n = obj.dimension();
  const std::size_t levels = cfg.truncations.size();

  // Candidate pool: atom indicators followed by the seeded random draws.
  const std::size_t pool = static_cast<std::size_t>(n) + cfg.sample_budget;
  std::vector<std::vector<double>> values(pool);
  auto candidate = [&](std::size_t i) {
    if (i < static_cast<std::size_t>(n)) {
      CVector e = CVector::Unit(n, static_cast<Eigen::Index>(i));
      return CVector(e / detail::weighted_lp(e, w, cfg.p));
    }
    return detail::random_unit_vector(derive_seed(cfg.seed, i - static_cast<std::size_t>(n)), n, obj.real(), w, cfg.p);
  };
  parallel_for(pool, resolve_threads(cfg.threads), [&](std::size_t i) { values[i] = obj.ratios(candidate(i)); });

  EmpiricalReport rep;
  rep.operator_id = family.operator_id;
  rep.family = family.kind;
  rep.order = family.order;
  rep.time_step = is_continuous(family.kind) ? family.time_step : 0.0;
  rep.config = cfg;
  rep.truncations = cfg.truncations;

  std::vector<CVector> witnesses;
  for (std::size_t lvl = 0; lvl < levels; ++lvl) {
    const std::size_t m = cfg.truncations[lvl];
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool; ++i) {
      if (values[i][lvl] > values[best][lvl]) best = i;
    }
    rep.best_sample_constants.push_back(values[best][lvl]);
    auto f = [&](const CVector& x) { return obj.ratio(x, m); };
    auto [x, fx] = detail::ascend(f, candidate(best), obj.real(), w, cfg.p, cfg.ascent_steps);
    CVector chosen = x;
    double value = fx;
    for (const CVector& prev : witnesses) {
      const double v = obj.ratio(prev, m);
      if (v > value) {
        value = v;
        chosen = prev;
      }
    }
    witnesses.push_back(chosen);
    rep.constants.push_back(value);
  }
  const CVector& final_witness = witnesses.back();
  rep.witness.assign(final_witness.data(), final_witness.data() + final_witness.size());
  rep.growth = rep.constants.back() / rep.constants.front() - 1.0;
  rep.verdict = detail::classify(rep.growth, cfg);
  rep.jumps = jump_check(obj, final_witness, cfg.truncations.back(), cfg.p, cfg.q, w);

  if (const auto* t = std::get_if<MatrixOperator>(&family.base)) {
    const Spectrum sp = spectrum(*t);
    if (sp.trustworthy) rep.stolz_k = stolz_constants(sp.eigenvalues).k_min;
  } else {
    const auto& g = std::get<GeneratorModel>(family.base);
    const MatrixOperator unit_time = evolve(g, 1.0);
    const Spectrum sp = spectrum(unit_time);
    if (sp.trustworthy) rep.stolz_k = stolz_constants(sp.eigenvalues).k_min;

    // Dyadic refinement of the witness path at its most varying atom over (0, t_max].
    const double t_max = family.time_step * static_cast<double>(cfg.truncations.front());
    const auto traj = obj.trajectories(final_witness, cfg.truncations.front());
    const std::size_t ends[1] = {cfg.truncations.front()};
    std::size_t atom = 0;
    double top = -1.0;
    for (std::size_t a = 0; a < traj.size(); ++a) {
      const double v = detail::vq_prefix_norms<Complex>(traj[a], cfg.q, ends).front();
      if (v > top) { top = v; atom = a; }
    }
    const MatrixOperator id_op = g.wrap(CMatrix::Identity(n, n));
    const OperatorFamilySpec fam = family;
    auto sampler = [&](double t) -> Complex {
      CMatrix f;
      switch (fam.kind) {
        case FamilyKind::continuous_powers: f = evolve(g, t).matrix(); break;
        case FamilyKind::continuous_averages: f = continuous_average(g, t).matrix(); break;
        default: f = derivative_family(g, t, fam.order).matrix();
      }
      return (f * final_witness)[static_cast<Eigen::Index>(atom)];
    };
    int levels_cap = 1;
    while (levels_cap < 6 && std::ldexp(t_max, levels_cap + 1) <= 4096.0) ++levels_cap;
    rep.refinement_profile = dyadic_vq_profile(sampler, t_max, VariationExponent(cfg.q), levels_cap);
  }
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

struct SweepReport {
  std::vector<double> qs;          // v^q points, strictly decreasing, all > 2
  std::vector<double> constants;   // nondecreasing as q decreases
  std::optional<double> o2_constant;  // present when the list reached q = 2 (oscillation norm)
  std::size_t truncation = 0;
  EmpiricalReport last_run;
};

/// Empirical constants at one truncation for a decreasing list of q. Witnesses
/// found at any q are re-evaluated at every q, so the constants inherit the
/// monotonicity of v^q in q. A final q = 2 entry is evaluated in o^2 mode.
inline SweepReport q_sweep(const OperatorFamilySpec& family, const ExperimentConfig& cfg,
                           std::span<const double> qs, std::size_t truncation) {
  if (qs.empty()) throw ParameterError("q list must be nonempty");
  for (std::size_t i = 1; i < qs.size(); ++i) {
    if (!(qs[i] < qs[i - 1])) throw ParameterError("q list must be strictly decreasing");
  }
  SweepReport out;
  out.truncation = truncation;
  std::vector<CVector> witnesses;
  for (double q : qs) {
    if (q == 2.0 && cfg.partition) {
      ExperimentConfig c = cfg;
      c.q = 2.0;
      c.mode = NormMode::oscillation;
      c.allow_q2 = true;
      c.truncations = {truncation};
      out.o2_constant = empirical_constant(family, c).constants.front();
      continue;
    }
    if (!(q > 2.0)) throw ParameterError("q <= 2 is not allowed in v^q mode (supply a partition for q = 2)");
    ExperimentConfig c = cfg;
    c.q = q;
    c.mode = NormMode::variation;
    c.truncations = {truncation};
    out.last_run = empirical_constant(family, c);
    const auto& wv = out.last_run.witness;
    witnesses.emplace_back(Eigen::Map<const CVector>(wv.data(), static_cast<Eigen::Index>(wv.size())));
    out.qs.push_back(q);
  }
  const SpacePtr space = base_space(family.base);
  const std::vector<CMatrix> mats = family_matrices(family, truncation);
  for (double q : out.qs) {
    ExperimentConfig c = cfg;
    c.q = q;
    c.mode = NormMode::variation;
    const TrajectoryObjective obj(mats, space, c, {truncation});
    double best = 0.0;
    for (const CVector& x : witnesses) best = std::max(best, obj.ratio(x, truncation));
    out.constants.push_back(best);
  }
  return out;
}

struct SquareFunctionResult {
  double s_value = 0.0;     // ||S(x)||_p, S(x) = (sum_n n |M_{n+1}x - M_n x|^2)^{1/2}
  double phi_value = 0.0;   // ||Phi_m(x)||_p, Phi_m = (sum_n (n+1)^{2m+1} |Delta_n^{m+1} x|^2)^{1/2}
  double tail_last_term = 0.0;    // max over atoms of the last Phi summand
  double s_tail_last_term = 0.0;  // same for S
};

/// Square functions truncated at n = N (sums over n = 0..N).
inline SquareFunctionResult square_function(const MatrixOperator& t, const LpVector& x, int m, long n_max, double p) {
  if (m < 0) throw ParameterError("square function order must be >= 0");
  if (n_max < 1 || n_max > 10000) throw ParameterError("square function truncation must lie in 1..1e4");
  if (!(*x.space() == *t.space())) throw InputError("vector and operator live on different spaces");
  const CMatrix& a = t.matrix();
  const CMatrix id = CMatrix::Identity(a.rows(), a.cols());
  RVector s2 = RVector::Zero(a.rows()), phi2 = RVector::Zero(a.rows());
  RVector s_last, phi_last;

  CVector delta = matrix_power(a - id, m + 1) * x.entries();  // Delta_0^{m+1} x
  CVector power = x.entries();                                 // T^n x
  CVector sum = x.entries();                                   // sum_{k<=n} T^k x
  CVector avg = sum;                                           // M_n x
  for (long n = 0; n <= n_max; ++n) {
    const RVector phi_term = std::pow(static_cast<double>(n + 1), 2 * m + 1) * delta.cwiseAbs2();
    phi2 += phi_term;
    delta = a * delta;
    power = a * power;
    sum += power;
    const CVector next_avg = sum / static_cast<double>(n + 2);
    const RVector s_term = static_cast<double>(n) * (next_avg - avg).cwiseAbs2();
    s2 += s_term;
    avg = next_avg;
    if (n == n_max) {
      phi_last = phi_term;
      s_last = s_term;
    }
  }
  const RVector& w = t.space()->weights();
  return {detail::weighted_lp(s2.cwiseSqrt(), w, p), detail::weighted_lp(phi2.cwiseSqrt(), w, p),
          phi_last.maxCoeff(), s_last.maxCoeff()};
}

/// Square functions of the time-one operator T_1 = e^{A}.
inline SquareFunctionResult square_function(const GeneratorModel& g, const LpVector& x, int m, long n_max, double p) {
  return square_function(evolve(g, 1.0), x, m, n_max, p);
}

enum class TelescopingIdentity {
  sum_of_differences,  // Delta_N^m - Delta_n^m = sum_{j=n}^{N-1} Delta_j^{m+1}
  doubling             // n^m Delta_{2n+1}^m expressed through Delta^{m+1}, Delta^m, Delta^{m-1}
};

struct TelescopingResult {
  double max_defect = 0.0;  // max entrywise |lhs - rhs|
  double scale = 0.0;       // max entrywise magnitude of either side
};

inline TelescopingResult telescoping_check(const MatrixOperator& t, long n, long big_n, long m,
                                           TelescopingIdentity which = TelescopingIdentity::sum_of_differences) {
  const CMatrix& a = t.matrix();
  CMatrix lhs, rhs;
  if (which == TelescopingIdentity::sum_of_differences) {
    if (n < 0 || n >= big_n) throw ParameterError("identity needs 0 <= n < N");
    if (m < -1 || (m == -1 && n < 1)) throw ParameterError("Delta^m is undefined for these indices");
    lhs = difference_matrix(a, big_n, m) - difference_matrix(a, n, m);
    rhs = CMatrix::Zero(a.rows(), a.cols());
    for (long j = n; j < big_n; ++j) rhs += difference_matrix(a, j, m + 1);
  } else {
    if (n < 1 || m < 0) throw ParameterError("doubling identity needs n >= 1 and m >= 0");
    const double nm = std::pow(static_cast<double>(n), static_cast<double>(m));
    const double nm1 = std::pow(static_cast<double>(n), static_cast<double>(m - 1));
    lhs = nm * difference_matrix(a, 2 * n + 1, m);
    CMatrix sum = CMatrix::Zero(a.rows(), a.cols());
    for (long j = n; j <= 2 * n; ++j) sum += static_cast<double>(j + 1) * difference_matrix(a, j, m + 1);
    rhs = nm1 * sum -
          nm1 * static_cast<double>(n + 1) * (difference_matrix(a, 2 * n + 1, m) - difference_matrix(a, n, m)) +
          nm1 * difference_matrix(a, 2 * n + 1, m - 1) - nm1 * difference_matrix(a, n + 1, m - 1);
  }
  return {(lhs - rhs).cwiseAbs().maxCoeff(), std::max(lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff())};
}

enum class ConvergenceMode { powers, averages, continuous_powers, continuous_averages, t_to_zero };

/// sup over atoms of |F(x) - limit| along a schedule of n (discrete modes)
/// or t (continuous modes). The limit is P_T x, P_A x, or x for t -> 0+.
inline std::vector<double> pointwise_convergence(const Base& base, const LpVector& x, ConvergenceMode mode,
                                                 std::span<const double> schedule) {
  const bool discrete = mode == ConvergenceMode::powers || mode == ConvergenceMode::averages;
  std::vector<double> out;
  out.reserve(schedule.size());
  if (discrete) {
    const auto* t = std::get_if<MatrixOperator>(&base);
    if (!t) throw InputError("discrete convergence modes need a matrix operator");
    const CVector limit = mean_ergodic_projection(*t).projection.matrix() * x.entries();
    for (double s : schedule) {
      if (!(s >= 0.0) || s != std::floor(s)) throw ParameterError("discrete schedule entries must be integers >= 0");
      const long n = static_cast<long>(s);
      const CMatrix f = mode == ConvergenceMode::powers ? matrix_power(t->matrix(), n)
                                                        : ergodic_average(*t, n).matrix();
      out.push_back((f * x.entries() - limit).cwiseAbs().maxCoeff());
    }
    return out;
  }
  const auto* g = std::get_if<GeneratorModel>(&base);
  if (!g) throw InputError("continuous convergence modes need a generator");
  CVector limit = x.entries();
  if (mode != ConvergenceMode::t_to_zero) limit = detail::kernel_projection(g->matrix()) * x.entries();
  for (double t : schedule) {
    require_time(t, false);
    const CMatrix f = mode == ConvergenceMode::continuous_averages ? continuous_average(*g, t).matrix()
                                                                   : evolve(*g, t).matrix();
    out.push_back((f * x.entries() - limit).cwiseAbs().maxCoeff());
  }
  return out;
}

struct TransferenceResult {
  double lhs = 0.0;  // || sum_j h_j U^j ||_2 with U the cyclic shift on Z_N
  double rhs = 0.0;  // sup over a circle grid of |h-hat|
  bool ok = false;
  int grid_points = 0;
};

/// Scalar p = 2 transference on Z_N: kernel h_j, j = first_offset + k, must be
/// supported in (-N/2, N/2). The circle grid contains the N-th roots of unity.
inline TransferenceResult transference_check_p2(std::span<const Complex> h, long first_offset, std::size_t n) {
  if (n == 0) throw ParameterError("N must be positive");
  const auto big = static_cast<long>(n);
  for (std::size_t k = 0; k < h.size(); ++k) {
    const long j = first_offset + static_cast<long>(k);
    if (h[k] != Complex(0.0) && 2 * std::abs(j) >= big) {
      throw InputError("kernel support must lie strictly inside (-N/2, N/2)");
    }
  }
  // U^j is the permutation e_i -> e_{i+j}, so sum_j h_j U^j is a circulant.
  CMatrix r = CMatrix::Zero(big, big);
  for (std::size_t k = 0; k < h.size(); ++k) {
    const long j = first_offset + static_cast<long>(k);
    for (long i = 0; i < big; ++i) r(i, ((i - j) % big + big) % big) += h[k];
  }
  TransferenceResult out;
  out.lhs = detail::spectral_norm(r);  // uniform weights
  const auto per = static_cast<int>((8192 + n - 1) / n);
  out.grid_points = per * static_cast<int>(n);
  for (int g = 0; g < out.grid_points; ++g) {
    const double theta = 2.0 * std::numbers::pi * g / out.grid_points;
    const Complex step = std::polar(1.0, theta);
    Complex phase = std::polar(1.0, theta * static_cast<double>(first_offset));
    Complex acc = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k, phase *= step) acc += h[k] * phase;
    out.rhs = std::max(out.rhs, std::abs(acc));
  }
  out.ok = out.lhs <= out.rhs + 1e-9;
  return out;
}

/// Presets behind the verify subcommand's --theorem option.
struct Preset {
  FamilyKind family;
  NormMode mode;
  bool continuous;
};

inline Preset theorem_preset(const std::string& name) {
  if (name == "averages" || name == "jumps") return {FamilyKind::ergodic_averages, NormMode::variation, false};
  if (name == "powers") return {FamilyKind::powers, NormMode::variation, false};
  if (name == "differences") return {FamilyKind::differences, NormMode::variation, false};
  if (name == "oscillation") return {FamilyKind::ergodic_averages, NormMode::oscillation, false};
  if (name == "continuous-averages") return {FamilyKind::continuous_averages, NormMode::variation, true};
  if (name == "continuous-powers") return {FamilyKind::continuous_powers, NormMode::variation, true};
  throw ParameterError("unknown theorem preset '" + name + "'");
}

}  // namespace qvar
