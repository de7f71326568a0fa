#pragma once

// Command-line surface of the qvar library. `run` parses arguments, executes
// one subcommand and maps error classes onto exit statuses:
// 0 success, 1 input error, 2 numeric/degeneracy error, 3 precondition violation.

#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qvar/io.hpp"
#include "qvar/qvar.hpp"

namespace qvar::cli {

using nlohmann::json;

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

inline double parse_real(const std::string& s) {
  if (s == "inf" || s == "infinity") return kInf;
  return io::parse_number(s, "command line");
}

inline std::vector<double> parse_reals(const std::string& s) {
  std::vector<double> out;
  for (const auto& t : split(s, ',')) out.push_back(parse_real(t));
  return out;
}

inline std::vector<std::size_t> parse_indices(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& t : split(s, ',')) {
    const double v = parse_real(t);
    if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw InputError("expected a nonnegative integer, got '" + t + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

/// "re" or "re:im" entries separated by commas.
inline std::vector<Complex> parse_complex_list(const std::string& s) {
  std::vector<Complex> out;
  for (const auto& t : split(s, ',')) {
    const auto parts = split(t, ':');
    if (parts.size() == 1) out.emplace_back(parse_real(parts[0]), 0.0);
    else if (parts.size() == 2) out.emplace_back(parse_real(parts[0]), parse_real(parts[1]));
    else throw InputError("malformed complex entry '" + t + "'");
  }
  return out;
}

/// Where an operator comes from: a matrix file or a zoo member.
struct OperatorSource {
  std::string op_path;
  std::string generator_path;
  std::string weights_path;
  std::string zoo;
  std::size_t zoo_n = 0;
  std::string kernel;
  std::string spectrum;
  std::uint64_t zoo_seed = 1;

  void attach(CLI::App* app, bool with_size_flag) {
    app->add_option("--op", op_path, "Operator matrix file (CSV rows or JSON {matrix, weights})");
    app->add_option("--weights", weights_path, "Atom weights, one per line (default: uniform 1/N)");
    app->add_option("--zoo", zoo,
                    "Zoo operator id[:N]: lazy_symmetric_walk, rotation_shift, swap, convolution, "
                    "random_positive_contraction, diagonal_normal");
    if (with_size_flag) app->add_option("--N", zoo_n, "Zoo operator size");
    app->add_option("--size", zoo_n, "Zoo operator size (alias of --N / id:N)");
    app->add_option("--kernel", kernel, "Convolution kernel nu_0,...,nu_{N-1}");
    app->add_option("--spectrum", spectrum, "diagonal_normal spectrum: re or re:im, comma separated");
    app->add_option("--zoo-seed", zoo_seed, "Seed of random_positive_contraction");
  }

  void attach_generator(CLI::App* app) {
    app->add_option("--generator", generator_path, "Generator matrix file A (CSV or JSON)");
  }

  std::string id() const {
    if (!zoo.empty()) return zoo + (zoo_n && zoo.find(':') == std::string::npos ? ":" + std::to_string(zoo_n) : "");
    if (!op_path.empty()) return op_path;
    return generator_path;
  }

  zoo::ZooSpec zoo_spec() const {
    zoo::ZooSpec spec;
    const auto parts = split(zoo, ':');
    if (parts.empty()) throw InputError("empty --zoo id");
    spec.id = parts[0];
    spec.n = zoo_n ? zoo_n : 8;
    if (parts.size() == 2) spec.n = parse_indices(parts[1]).at(0);
    spec.kernel = kernel.empty() ? std::vector<double>{} : parse_reals(kernel);
    spec.spectrum = spectrum.empty() ? std::vector<Complex>{} : parse_complex_list(spectrum);
    spec.seed = zoo_seed;
    return spec;
  }

  MatrixOperator load_matrix(const std::string& path) const {
    io::MatrixFile f = io::read_matrix_file(path);
    std::vector<double> w = weights_path.empty() ? f.weights : io::read_weights(weights_path);
    SpacePtr space = io::make_space(static_cast<std::size_t>(f.matrix.rows()), w);
    return MatrixOperator(std::move(f.matrix), std::move(space));
  }

  MatrixOperator matrix() const {
    if (!op_path.empty()) return load_matrix(op_path);
    if (!zoo.empty()) return zoo::build_matrix(zoo_spec());
    throw InputError("an operator is required (--op or --zoo)");
  }

  /// Generator file, or A = T - I for an operator file / zoo member.
  GeneratorModel generator() const {
    if (!generator_path.empty()) {
      const MatrixOperator a = load_matrix(generator_path);
      return GeneratorModel(a.matrix(), a.space());
    }
    return zoo::markov_generator_from(matrix());
  }

  Base base(bool continuous) const {
    if (continuous) return generator();
    return matrix();
  }
};

inline json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(io::complex_to_json(m(i, j)));
    rows.push_back(r);
  }
  return rows;
}

struct Output {
  std::string json_path;
  std::string csv_path;
};

inline void emit(const json& j, const Output& o, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (o.json_path.empty()) {
    out << text;
  } else {
    io::write_text(o.json_path, text);
  }
}

inline CVector witness_vector(const std::string& path, std::uint64_t seed, std::size_t n) {
  if (!path.empty()) {
    CVector x = io::read_vector(path);
    if (static_cast<std::size_t>(x.size()) != n) throw InputError("vector length does not match the operator");
    return x;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  CVector x(static_cast<Eigen::Index>(n));
  for (auto& v : x) v = Complex(g(rng), 0.0);
  return x;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"qvar: strong q-variation norms, analyticity diagnostics and variational ergodic experiments"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: QVAR_THREADS, else hardware concurrency)");
  detail::Output output;
  app.add_option("--output,-o", output.json_path, "Write the JSON report here instead of stdout");
  app.add_option("--csv", output.csv_path, "Also write a CSV table here");

  // vnorm
  std::string input;
  double q = 3.0;
  bool brute = false;
  auto* vnorm = app.add_subcommand("vnorm", "Strong q-variation norm of a sequence (CSV: re[,im] per line)");
  vnorm->add_option("--input", input, "Sequence file")->required();
  vnorm->add_option("--q", q, "Variation exponent q >= 1")->required();
  vnorm->add_flag("--bruteforce", brute, "Also evaluate the exhaustive chain enumeration (length <= 20)");

  // onorm
  std::string blocks;
  auto* onorm = app.add_subcommand("onorm", "Oscillation norm relative to a block partition");
  onorm->add_option("--input", input, "Sequence file")->required();
  onorm->add_option("--blocks", blocks, "Boundaries 0,n_1,n_2,... (default: dyadic)");

  // jumps
  double tau = 0.0;
  auto* jumps = app.add_subcommand("jumps", "Number of tau-jumps of a sequence");
  jumps->add_option("--input", input, "Sequence file")->required();
  jumps->add_option("--tau", tau, "Jump threshold tau > 0")->required();
  jumps->add_option("--q", q, "Exponent for the bound tau^q N <= ||a||_{v^q}^q");

  // opnorm
  detail::OperatorSource src;
  std::string p_text = "2";
  bool regular = false;
  auto* opnorm = app.add_subcommand("opnorm", "Operator norm ||T||_{p->p} (exact at p = 1, 2, inf; interval otherwise)");
  src.attach(opnorm, true);
  opnorm->add_option("--p", p_text, "Exponent p in [1, inf]");
  opnorm->add_flag("--regular", regular, "Also report the regular norm || |T| ||_p");

  // analytic
  long n_max = 64;
  auto* analytic = app.add_subcommand("analytic", "Power-boundedness and analyticity diagnostics");
  src.attach(analytic, false);
  analytic->add_option("--p", p_text, "Exponent p");
  analytic->add_option("--N", n_max, "Difference profile length");

  // ritt
  std::string radii = "2,1.5,1.1,1.01,1.001";
  int angles = 256;
  auto* ritt = app.add_subcommand("ritt", "Grid estimate of sup |z-1| ||(zI - T)^{-1}|| over |z| > 1");
  src.attach(ritt, true);
  ritt->add_option("--p", p_text, "Exponent p");
  ritt->add_option("--radii", radii, "Radii > 1");
  ritt->add_option("--angles", angles, "Angles per radius");

  // nrange
  double gamma = 1.0;
  int grid_points = 720;
  auto* nrange = app.add_subcommand("nrange", "Numerical range containment in the Stolz domain B_gamma");
  src.attach(nrange, true);
  nrange->add_option("--gamma", gamma, "Angle gamma in (0, pi/2)")->required();
  nrange->add_option("--grid", grid_points, "Number of support-function angles (>= 360)");

  // semigroup
  double t = 1.0;
  std::string what = "evolve";
  int order = 0;
  std::string t_grid;
  auto* semigroup = app.add_subcommand("semigroup", "T_t = e^{tA}, continuous averages, derivatives, analytic profile");
  src.attach(semigroup, true);
  src.attach_generator(semigroup);
  semigroup->add_option("--t", t, "Time t");
  semigroup->add_option("--what", what, "evolve | average | derivative | profile")
      ->check(CLI::IsMember({"evolve", "average", "derivative", "profile"}));
  semigroup->add_option("--m", order, "Derivative order");
  semigroup->add_option("--p", p_text, "Exponent p (profile)");
  semigroup->add_option("--grid", t_grid, "Time grid for the profile (default: 1e-3..1e3, 200 per decade)");

  // subordinate
  double alpha = 0.5;
  std::string method = "spectral";
  int nodes = 200000;
  auto* subord = app.add_subcommand("subordinate", "Subordinated semigroup e^{-t(-A)^alpha}");
  src.attach(subord, true);
  src.attach_generator(subord);
  subord->add_option("--alpha", alpha, "Exponent alpha in (0, 1)");
  subord->add_option("--t", t, "Time t > 0");
  subord->add_option("--method", method, "spectral | quadrature | both")
      ->check(CLI::IsMember({"spectral", "quadrature", "both"}));
  subord->add_option("--nodes", nodes, "Quadrature node budget");

  // verify / sweep share the experiment options
  std::string theorem = "powers";
  double p_exp = 2.0;
  std::string truncations = "64,128,256,512";
  std::size_t budget = 2000;
  int ascent = 20;
  std::uint64_t seed = 7;
  double time_step = 0.25;
  double stable = 0.05, growing = 1.0;
  auto add_experiment = [&](CLI::App* sub) {
    src.attach(sub, true);
    src.attach_generator(sub);
    sub->add_option("--theorem", theorem,
                    "averages | powers | differences | oscillation | continuous-averages | continuous-powers | jumps")
        ->check(CLI::IsMember({"averages", "powers", "differences", "oscillation", "continuous-averages",
                               "continuous-powers", "jumps"}));
    sub->add_option("--p", p_exp, "Exponent p in (1, inf)");
    sub->add_option("--budget", budget, "Random sphere samples");
    sub->add_option("--ascent", ascent, "Finite-difference ascent steps");
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--m", order, "Difference / derivative order");
    sub->add_option("--time-step", time_step, "Grid spacing h for continuous families");
    sub->add_option("--blocks", blocks, "Block partition for the oscillation norm (default: dyadic)");
    sub->add_option("--stable-threshold", stable, "Relative drift below which the verdict is stable");
    sub->add_option("--growing-threshold", growing, "Relative drift above which the verdict is growing");
  };
  auto* verify = app.add_subcommand("verify", "Empirical constant of a variational inequality across truncations");
  add_experiment(verify);
  verify->add_option("--q", q, "Variation exponent q > 2");
  verify->add_option("--truncations", truncations, "Comma-separated truncations");

  std::string qs = "4,3,2.5,2.2";
  std::size_t truncation = 256;
  auto* sweep = app.add_subcommand("sweep", "Empirical constants for a decreasing list of q toward 2");
  add_experiment(sweep);
  sweep->add_option("--qs", qs, "Strictly decreasing q values (> 2; a final 2 needs --blocks)");
  sweep->add_option("--truncation", truncation, "Truncation");

  // convergence
  std::string mode = "powers";
  std::string schedule = "1,2,4,8,16,32,64,128";
  std::string x_path;
  auto* conv = app.add_subcommand("convergence", "Pointwise convergence distances along a schedule");
  src.attach(conv, true);
  src.attach_generator(conv);
  conv->add_option("--mode", mode, "powers | averages | continuous-powers | continuous-averages | t-to-zero")
      ->check(CLI::IsMember({"powers", "averages", "continuous-powers", "continuous-averages", "t-to-zero"}));
  conv->add_option("--schedule", schedule, "n values (discrete) or t values (continuous)");
  conv->add_option("--x", x_path, "Initial vector file (default: seeded Gaussian)");
  conv->add_option("--seed", seed, "Seed of the default vector");

  // identity-check
  std::string identity = "sum-of-differences";
  long n_lo = 0, n_hi = 3, m_order = 0;
  auto* ident = app.add_subcommand("identity-check", "Telescoping identities for Delta_n^m = T^n (T - I)^m");
  src.attach(ident, true);
  ident->add_option("--identity", identity, "sum-of-differences | doubling")
      ->check(CLI::IsMember({"sum-of-differences", "doubling"}));
  ident->add_option("--n", n_lo, "Lower index n");
  ident->add_option("--upper", n_hi, "Upper index N (sum-of-differences)");
  ident->add_option("--m", m_order, "Difference order m");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::input);
  }

  try {
    const double p = detail::parse_real(p_text);
    auto print_number = [&](double v) { out << io::format_double(v) << "\n"; };

    if (*vnorm) {
      const ScalarSequence seq = io::read_sequence(input);
      const VariationExponent qe(q);
      const double v = vq_norm(seq, qe);
      print_number(v);
      json j = {{"q", q}, {"length", seq.size()}, {"vq_norm", v}};
      if (brute) {
        const double b = vq_norm_bruteforce(seq, qe);
        j["bruteforce"] = b;
        out << "bruteforce " << io::format_double(b) << "\n";
      }
      if (!output.json_path.empty()) detail::emit(j, output, out);
      return 0;
    }
    if (*onorm) {
      const ScalarSequence seq = io::read_sequence(input);
      const BlockPartition part =
          blocks.empty() ? BlockPartition::dyadic(seq.size() - 1) : BlockPartition(detail::parse_indices(blocks));
      const double v = oscillation_norm(seq, part);
      print_number(v);
      if (!output.json_path.empty()) detail::emit({{"oscillation_norm", v}}, output, out);
      return 0;
    }
    if (*jumps) {
      const ScalarSequence seq = io::read_sequence(input);
      const std::size_t count = jump_count(seq, tau);
      out << count << "\n";
      json j = {{"tau", tau}, {"jumps", count}};
      if (jumps->count("--q")) {
        const double v = vq_norm(seq, VariationExponent(q));
        const double lhs = std::pow(tau, q) * static_cast<double>(count);
        j["bound"] = {{"lhs", lhs}, {"rhs", std::pow(v, q)}, {"holds", lhs <= std::pow(v, q) * (1 + 1e-12)}};
      }
      if (!output.json_path.empty()) detail::emit(j, output, out);
      return 0;
    }
    if (*opnorm) {
      const MatrixOperator op = src.matrix();
      json j = {{"operator_id", src.id()}, {"p", io::number_or_inf(p)}, {"norm", io::to_json(operator_pnorm(op, p))}};
      if (regular) j["regular_norm"] = io::to_json(regular_norm(op, p));
      j["flags"] = {{"nonnegative_entries", op.nonnegative_entries()},
                    {"row_stochastic", op.row_stochastic()},
                    {"normality_defect", op.normality_defect()}};
      detail::emit(j, output, out);
      return 0;
    }
    if (*analytic) {
      const MatrixOperator op = src.matrix();
      const AnalyticityReport rep = analyze(op, p, n_max);
      detail::emit(io::to_json(rep, src.id(), p), output, out);
      if (!output.csv_path.empty()) io::write_text(output.csv_path, io::csv_profile(rep.profile));
      return 0;
    }
    if (*ritt) {
      const MatrixOperator op = src.matrix();
      const std::vector<double> r = detail::parse_reals(radii);
      const RittEstimate est = ritt_resolvent_sup(op, p, r, angles);
      detail::emit({{"operator_id", src.id()},
                    {"ritt_sup", io::to_json(est.sup)},
                    {"grid_lower_estimate", true},
                    {"argmax", io::complex_to_json(est.argmax)},
                    {"radii", est.radii},
                    {"angles_per_radius", est.angles_per_radius}},
                   output, out);
      return 0;
    }
    if (*nrange) {
      const MatrixOperator op = src.matrix();
      const NumericalRangeResult r = numerical_range_check(op, gamma, grid_points);
      detail::emit({{"operator_id", src.id()},
                    {"gamma", gamma},
                    {"contained", r.contained},
                    {"margin", r.margin},
                    {"grid_points", r.grid_points}},
                   output, out);
      return 0;
    }
    if (*semigroup) {
      const GeneratorModel g = src.generator();
      json j = {{"generator_id", src.id()}, {"markov_generator", g.markov_generator()}, {"what", what}};
      if (what == "profile") {
        const std::vector<double> grid = t_grid.empty() ? default_time_grid() : detail::parse_reals(t_grid);
        const AnalyticProfile prof = analytic_profile(g, p, grid);
        j["C0"] = prof.c0;
        j["C1"] = prof.c1;
        j["C1_argmax"] = prof.c1_argmax;
        j["grid"] = {{"size", grid.size()}, {"min", grid.front()}, {"max", grid.back()}};
        j["grid_lower_estimate"] = true;
      } else {
        j["t"] = t;
        const MatrixOperator r = what == "evolve"    ? evolve(g, t)
                                 : what == "average" ? continuous_average(g, t)
                                                     : derivative_family(g, t, order);
        if (what == "derivative") j["m"] = order;
        j["matrix"] = detail::matrix_to_json(r.matrix());
      }
      detail::emit(j, output, out);
      return 0;
    }
    if (*subord) {
      const GeneratorModel g = src.generator();
      json j = {{"generator_id", src.id()}, {"alpha", alpha}, {"t", t}};
      auto one = [&](SubordinationMethod m) {
        const SubordinationResult r = subordinate(g, {alpha, t, m, nodes});
        json k = {{"matrix", detail::matrix_to_json(r.op.matrix())},
                  {"regular_norm_p2", io::to_json(regular_norm(r.op, 2.0))},
                  {"row_stochastic", r.op.row_stochastic()}};
        if (m == SubordinationMethod::quadrature) {
          k["quadrature_nodes"] = r.nodes;
          k["tail_mass"] = r.tail_mass;
          k["weight_sum"] = r.weight_sum;
        }
        return std::pair{k, r.op.matrix()};
      };
      if (method == "both") {
        auto [sj, a] = one(SubordinationMethod::spectral);
        auto [qj, b] = one(SubordinationMethod::quadrature);
        j["spectral"] = std::move(sj);
        j["quadrature"] = std::move(qj);
        j["max_entry_difference"] = (a - b).cwiseAbs().maxCoeff();
      } else {
        const auto m = method == "spectral" ? SubordinationMethod::spectral : SubordinationMethod::quadrature;
        j[method] = one(m).first;
      }
      detail::emit(j, output, out);
      return 0;
    }
    if (*verify || *sweep) {
      const Preset preset = theorem_preset(theorem);
      OperatorFamilySpec fam{preset.family, src.base(preset.continuous), order, time_step, src.id()};
      if (preset.family == FamilyKind::differences && order == 0) fam.order = 1;
      ExperimentConfig cfg;
      cfg.p = p_exp;
      cfg.q = q;
      cfg.mode = preset.mode;
      if (!blocks.empty()) cfg.partition = BlockPartition(detail::parse_indices(blocks));
      cfg.sample_budget = budget;
      cfg.ascent_steps = ascent;
      cfg.seed = seed;
      cfg.threads = threads;
      cfg.stable_threshold = stable;
      cfg.growing_threshold = growing;
      if (*verify) {
        cfg.truncations = detail::parse_indices(truncations);
        if (preset.mode == NormMode::oscillation) cfg.allow_q2 = true;
        const EmpiricalReport rep = empirical_constant(fam, cfg);
        json j = io::to_json(rep);
        j["theorem"] = theorem;
        detail::emit(j, output, out);
        if (!output.csv_path.empty()) io::write_text(output.csv_path, io::csv_constants(rep));
      } else {
        const std::vector<double> qlist = detail::parse_reals(qs);
        if (!blocks.empty()) cfg.allow_q2 = true;
        const SweepReport rep = q_sweep(fam, cfg, qlist, truncation);
        json j = io::to_json(rep);
        j["theorem"] = theorem;
        detail::emit(j, output, out);
        if (!output.csv_path.empty()) io::write_text(output.csv_path, io::csv_sweep(rep));
      }
      return 0;
    }
    if (*conv) {
      const bool continuous = mode != "powers" && mode != "averages";
      const Base base = src.base(continuous);
      const SpacePtr space = base_space(base);
      const LpVector x(detail::witness_vector(x_path, seed, space->size()), space);
      const ConvergenceMode cm = mode == "powers"              ? ConvergenceMode::powers
                                 : mode == "averages"          ? ConvergenceMode::averages
                                 : mode == "continuous-powers" ? ConvergenceMode::continuous_powers
                                 : mode == "continuous-averages" ? ConvergenceMode::continuous_averages
                                                                 : ConvergenceMode::t_to_zero;
      const std::vector<double> sched = detail::parse_reals(schedule);
      const std::vector<double> d = pointwise_convergence(base, x, cm, sched);
      detail::emit({{"operator_id", src.id()}, {"mode", mode}, {"schedule", sched}, {"sup_distance", d}}, output, out);
      return 0;
    }
    if (*ident) {
      const MatrixOperator op = src.matrix();
      const TelescopingIdentity which =
          identity == "doubling" ? TelescopingIdentity::doubling : TelescopingIdentity::sum_of_differences;
      const TelescopingResult r = telescoping_check(op, n_lo, n_hi, m_order, which);
      const bool ok = r.max_defect <= 1e-10 * std::max(1.0, r.scale);
      detail::emit({{"operator_id", src.id()},
                    {"identity", identity},
                    {"n", n_lo},
                    {"upper", n_hi},
                    {"m", m_order},
                    {"max_defect", r.max_defect},
                    {"scale", r.scale},
                    {"ok", ok}},
                   output, out);
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::input);
  }
  return static_cast<int>(ErrorKind::input);
}

}  // namespace qvar::cli
